"""Exogenous parameters, the state space and its region map.

A state ``(n1, n2)`` counts the blocks on the honest and on the dishonest
branch of a fork.  States are stored level by level (level ``k`` is the
set of states with ``n1 == k``) and, inside a level, by ascending ``n2``.
"""

from __future__ import annotations

import enum
import math
import warnings
from collections.abc import Iterator, Mapping
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np


class ValidationError(ValueError):
    """Raised when an input violates a model constraint."""


class HonestMinorityWarning(UserWarning):
    """The dishonest pool mines at least as fast as the honest one."""


@dataclass(frozen=True)
class ModelParams:
    alpha1: float
    alpha2_tilde: float
    tau: float
    gamma: float
    mu: float
    c_P: float
    c_A: float
    r_B: float
    r_F: float
    m: int

    def __post_init__(self):
        for name in ("alpha1", "alpha2_tilde", "tau", "gamma", "mu", "c_P", "c_A", "r_B", "r_F"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or isinstance(value, bool) or not math.isfinite(value):
                raise ValidationError(f"{name} must be a finite real number")
            if value < 0:
                raise ValidationError(f"{name} must be ≥ 0")
        if isinstance(self.m, bool) or not isinstance(self.m, (int, np.integer)):
            raise ValidationError("m must be an integer")
        if self.m < 3:
            raise ValidationError("m must be ≥ 3")
        if self.mu <= 0:
            raise ValidationError("mu must be > 0")
        if self.alpha1 - self.gamma <= 0:
            raise ValidationError("alpha1 - gamma must be > 0 (lambda1 must be positive)")
        if self.lambda2 >= self.lambda1:
            warnings.warn(
                f"lambda2={self.lambda2:g} >= lambda1={self.lambda1:g}: honest pool is not the majority",
                HonestMinorityWarning,
                stacklevel=3,
            )

    @property
    def lambda1(self) -> float:
        return self.alpha1 - self.gamma

    @property
    def lambda2(self) -> float:
        return (self.alpha2_tilde + self.gamma) * (1.0 + self.tau)

    @property
    def R(self) -> float:
        return self.r_B + self.r_F

    @property
    def C(self) -> float:
        return (self.alpha2_tilde + self.gamma) * (self.c_P + self.c_A * (1.0 + self.tau))

    def with_reward(self, R: float) -> ModelParams:
        """Copy with ``r_B = R`` and ``r_F = 0``; only the sum enters the model."""
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", HonestMinorityWarning)
            return replace(self, r_B=float(R), r_F=0.0)

    def to_dict(self) -> dict:
        return {
            "alpha1": self.alpha1,
            "alpha2_tilde": self.alpha2_tilde,
            "tau": self.tau,
            "gamma": self.gamma,
            "mu": self.mu,
            "c_P": self.c_P,
            "c_A": self.c_A,
            "r_B": self.r_B,
            "r_F": self.r_F,
            "m": int(self.m),
        }


class Rates(NamedTuple):
    lambda1: float
    lambda2: float
    R: float
    C: float


def derive_rates(params: ModelParams) -> Rates:
    return Rates(params.lambda1, params.lambda2, params.R, params.C)


class State(NamedTuple):
    n1: int
    n2: int

    def key(self) -> str:
        return f"{self.n1},{self.n2}"


def parse_state(text: str) -> State:
    n1, n2 = text.split(",")
    return State(int(n1), int(n2))


class Region(enum.Enum):
    A1 = "A1"  # dishonest main chain formed, pegging optional
    A2 = "A2"  # dishonest chain hit the cap, pegging forced
    B = "B"  # honest main chain formed
    COMPETITION = "COMPETITION"


def in_space(state: tuple[int, int], m: int) -> bool:
    n1, n2 = state
    if n1 < 0 or n2 < 0 or n1 > m + 2 or n2 > m:
        return False
    return n1 < 2 or n2 >= n1 - 2


def classify(state: tuple[int, int], m: int) -> Region:
    if not in_space(state, m):
        raise ValidationError(f"state {tuple(state)} is outside the state space for m={m}")
    n1, n2 = state
    if n2 == n1 - 2:
        return Region.B
    if n2 == m and n1 <= m - 2:
        return Region.A2
    if n1 <= m - 3 and n1 + 2 <= n2 <= m - 1:
        return Region.A1
    return Region.COMPETITION


def level_size(k: int, m: int) -> int:
    if k in (0, 1):
        return m + 1
    return m - k + 3


def space_size(m: int) -> int:
    return 2 * (m + 1) + (m + 1) * (m + 2) // 2


@dataclass(frozen=True)
class StateSpace:
    m: int
    states: tuple[State, ...]
    regions: tuple[Region, ...]
    level_slices: tuple[slice, ...]
    _index: Mapping[State, int] = field(repr=False, compare=False)

    def __len__(self) -> int:
        return len(self.states)

    def __iter__(self) -> Iterator[State]:
        return iter(self.states)

    def index(self, state: tuple[int, int]) -> int:
        try:
            return self._index[State(*state)]
        except KeyError:
            raise ValidationError(f"state {tuple(state)} is outside the state space for m={self.m}") from None

    def region(self, state: tuple[int, int]) -> Region:
        return self.regions[self.index(state)]

    def level(self, k: int) -> tuple[State, ...]:
        return self.states[self.level_slices[k]]

    @property
    def n_levels(self) -> int:
        return len(self.level_slices)

    def indices_in(self, region: Region) -> np.ndarray:
        return np.array([i for i, r in enumerate(self.regions) if r is region], dtype=int)

    def keys(self) -> list[str]:
        return [s.key() for s in self.states]


def enumerate_states(m: int) -> StateSpace:
    if isinstance(m, bool) or not isinstance(m, (int, np.integer)):
        raise ValidationError("m must be an integer")
    if m < 3:
        raise ValidationError("m must be ≥ 3")
    m = int(m)
    states: list[State] = []
    slices = []
    for k in range(m + 3):
        lo = 0 if k < 2 else k - 2
        start = len(states)
        states.extend(State(k, n2) for n2 in range(lo, m + 1))
        slices.append(slice(start, len(states)))
    regions = tuple(classify(s, m) for s in states)
    index = {s: i for i, s in enumerate(states)}
    return StateSpace(m, tuple(states), regions, tuple(slices), index)


@dataclass(frozen=True)
class Policy:
    """Pegging probability on A1 states.

    Either one scalar ``p`` shared by every A1 state, or a per-state table
    (A1 states missing from the table fall back to ``default``).  A2 states
    always peg with probability 1, every other state with probability 0.
    """

    p: float | None = None
    per_state: Mapping[tuple[int, int], float] | None = None
    default: float = 0.0

    def __post_init__(self):
        if (self.p is None) == (self.per_state is None):
            raise ValidationError("policy needs exactly one of a scalar p or a per-state table")
        values = [self.default] + ([self.p] if self.p is not None else list(self.per_state.values()))
        for v in values:
            if not (0.0 <= float(v) <= 1.0):
                raise ValidationError(f"policy probability {v} outside [0, 1]")
        if self.per_state is not None:
            table = {State(*k): float(v) for k, v in self.per_state.items()}
            object.__setattr__(self, "per_state", table)

    @classmethod
    def scalar(cls, p: float) -> Policy:
        return cls(p=float(p))

    @property
    def is_scalar(self) -> bool:
        return self.p is not None

    def check(self, space: StateSpace) -> None:
        if self.per_state is None:
            return
        for s in self.per_state:
            if not in_space(s, space.m) or classify(s, space.m) is not Region.A1:
                raise ValidationError(f"policy key {tuple(s)} is not an A1 state for m={space.m}")

    def value(self, state: tuple[int, int], region: Region) -> float:
        if region is Region.A2:
            return 1.0
        if region is not Region.A1:
            return 0.0
        if self.p is not None:
            return self.p
        return self.per_state.get(State(*state), self.default)

    def controlled_states(self, space: StateSpace) -> list[State]:
        """A1 states whose probability is a free decision variable."""
        return [s for s, r in zip(space.states, space.regions) if r is Region.A1]
