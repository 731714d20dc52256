"""Generator, reward vector and their policy derivatives.

Transition rules (``p`` is the pegging probability of the current state):

==============  =============================================================
COMPETITION     ``lambda1 -> (n1+1, n2)``; ``lambda2 -> (n1, n2+1)`` if ``n2 < m``
A1              ``mu*p -> (0,0)``; ``lambda2*(1-p) -> (n1, n2+1)``; ``lambda1 -> (n1+1, n2)``
A2, B           ``mu -> (0,0)`` and nothing else (mining is halted while pegging)
==============  =============================================================

A peg out of A1 pays ``n2*R``, a peg out of A2 pays ``m*R`` and a peg out of
B pays nothing; the dishonest pool pays the cost rate ``C`` everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .model import ModelParams, Policy, Region, State, StateSpace, ValidationError, enumerate_states


class Transition(NamedTuple):
    dest: State
    rate: float
    lump: float  # reward in units of R collected when this transition fires
    d_rate: float  # derivative of rate w.r.t. the state's pegging probability


def transitions(state: State, region: Region, p: float, params: ModelParams) -> list[Transition]:
    n1, n2 = state
    lam1, lam2, mu, m = params.lambda1, params.lambda2, params.mu, params.m
    root = State(0, 0)
    if region is Region.COMPETITION:
        out = [Transition(State(n1 + 1, n2), lam1, 0.0, 0.0)]
        if n2 < m:
            out.append(Transition(State(n1, n2 + 1), lam2, 0.0, 0.0))
        return out
    if region is Region.A1:
        return [
            Transition(root, mu * p, float(n2), mu),
            Transition(State(n1, n2 + 1), lam2 * (1.0 - p), 0.0, -lam2),
            Transition(State(n1 + 1, n2), lam1, 0.0, 0.0),
        ]
    if region is Region.A2:
        return [Transition(root, mu, float(m), 0.0)]
    return [Transition(root, mu, 0.0, 0.0)]


@dataclass(frozen=True, eq=False)
class Dynamics:
    params: ModelParams
    space: StateSpace
    policy: Policy
    Q: np.ndarray
    dQ_dp: np.ndarray
    f_R: np.ndarray  # reward rate per unit of R
    f_C: np.ndarray  # reward rate that does not scale with R (the cost)
    df_R_dp: np.ndarray
    p_values: np.ndarray

    @property
    def f(self) -> np.ndarray:
        return self.params.R * self.f_R + self.f_C

    @property
    def df_dp(self) -> np.ndarray:
        return self.params.R * self.df_R_dp

    @property
    def n(self) -> int:
        return len(self.space)

    @property
    def root(self) -> int:
        return self.space.index((0, 0))

    def with_Q(self, Q: np.ndarray) -> Dynamics:
        return Dynamics(self.params, self.space, self.policy, Q, self.dQ_dp, self.f_R, self.f_C,
                        self.df_R_dp, self.p_values)


def build_generator(params: ModelParams, space: StateSpace, policy: Policy) -> Dynamics:
    if space.m != params.m:
        raise ValidationError(f"state space built for m={space.m} but params have m={params.m}")
    policy.check(space)
    n = len(space)
    Q = np.zeros((n, n))
    dQ = np.zeros((n, n))
    f_R = np.zeros(n)
    df_R = np.zeros(n)
    p_values = np.zeros(n)
    for i, (s, region) in enumerate(zip(space.states, space.regions)):
        p = policy.value(s, region)
        p_values[i] = p
        for t in transitions(s, region, p, params):
            j = space.index(t.dest)
            Q[i, j] += t.rate
            dQ[i, j] += t.d_rate
            # lump-sum rewards enter the reward rate as lump * firing rate
            f_R[i] += t.lump * t.rate
            df_R[i] += t.lump * t.d_rate
        Q[i, i] -= Q[i].sum()
        dQ[i, i] -= dQ[i].sum()
    f_C = np.full(n, -params.C)
    return Dynamics(params, space, policy, Q, dQ, f_R, f_C, df_R, p_values)


def build(params: ModelParams, p: float | Policy) -> Dynamics:
    policy = p if isinstance(p, Policy) else Policy.scalar(p)
    return build_generator(params, _space_for(params.m), policy)


_SPACES: dict[int, StateSpace] = {}


def _space_for(m: int) -> StateSpace:
    if m not in _SPACES:
        _SPACES[m] = enumerate_states(m)
    return _SPACES[m]


@dataclass(frozen=True)
class LevelBlocks:
    diag: list[np.ndarray]  # Q_{k,k}
    up: list[np.ndarray]  # B_k, level k -> k+1
    to_root_level: list[np.ndarray]  # Q_{k,0}, level k -> level 0; Q_{0,0} is diag[0]

    def assemble(self, space: StateSpace) -> np.ndarray:
        n = len(space)
        Q = np.zeros((n, n))
        sl = space.level_slices
        for k in range(space.n_levels):
            Q[sl[k], sl[k]] = self.diag[k]
            if k + 1 < space.n_levels:
                Q[sl[k], sl[k + 1]] = self.up[k]
            if k > 0:
                Q[sl[k], sl[0]] = self.to_root_level[k]
        return Q


def level_block_view(dyn: Dynamics, space: StateSpace | None = None) -> LevelBlocks:
    """Cut ``Q`` into the level-structured blocks.

    ``to_root_level[0]`` is the same array as ``diag[0]`` since both
    describe level 0 to level 0.
    """
    space = space or dyn.space
    sl = space.level_slices
    L = space.n_levels
    diag = [dyn.Q[sl[k], sl[k]].copy() for k in range(L)]
    up = [dyn.Q[sl[k], sl[k + 1]].copy() for k in range(L - 1)]
    to_root = [diag[0]] + [dyn.Q[sl[k], sl[0]].copy() for k in range(1, L)]
    return LevelBlocks(diag, up, to_root)
