"""Stationary distribution, average profit and performance potential."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import Dynamics, level_block_view
from .model import StateSpace


MAX_CONDITION = 1e12


class SolverError(RuntimeError):
    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message if residual is None else f"{message} (residual {residual:.3e})")
        self.residual = residual


def residual_scale(dyn: Dynamics) -> float:
    prm = dyn.params
    return max(prm.mu, prm.C, prm.R * prm.mu * prm.m)


def reachable_from_root(dyn: Dynamics) -> np.ndarray:
    """Boolean mask of states reachable from (0,0) along positive rates."""
    adj = dyn.Q > 0
    np.fill_diagonal(adj, False)
    seen = np.zeros(dyn.n, dtype=bool)
    stack = [dyn.root]
    seen[dyn.root] = True
    while stack:
        i = stack.pop()
        for j in np.flatnonzero(adj[i] & ~seen):
            seen[j] = True
            stack.append(j)
    return seen


def _check_pi(dyn: Dynamics, pi: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    if not np.all(np.isfinite(pi)):
        raise SolverError("stationary solve produced non-finite values")
    res = float(np.abs(pi @ dyn.Q).max())
    if res > tol * dyn.params.mu or abs(pi.sum() - 1.0) > 1e-9:
        raise SolverError("stationary solve failed", res)
    # tiny negative round-off is clipped; anything larger is a genuine failure
    if pi.min() < -1e-12:
        raise SolverError("stationary vector has negative entries", float(-pi.min()))
    return np.clip(pi, 0.0, None)


def stationary_direct(dyn: Dynamics) -> np.ndarray:
    """Solve ``pi Q = 0, pi e = 1`` on the communicating class of (0,0).

    States outside that class (only possible when some pegging probability
    is 1) get zero mass.
    """
    keep = reachable_from_root(dyn)
    idx = np.flatnonzero(keep)
    Qr = dyn.Q[np.ix_(idx, idx)]
    A = Qr.T.copy()
    A[0, :] = 1.0
    rhs = np.zeros(len(idx))
    rhs[0] = 1.0
    cond = np.linalg.cond(A)
    if not cond < MAX_CONDITION:
        raise SolverError(f"balance system is singular to working precision (condition number {cond:.3e})")
    sub = np.linalg.solve(A, rhs)
    pi = np.zeros(dyn.n)
    pi[idx] = sub
    return _check_pi(dyn, pi)


def stationary_level_recursive(dyn: Dynamics, space: StateSpace | None = None) -> np.ndarray:
    """Level-recursive solve.

    ``pi_k = pi_0 D_1 ... D_k`` with ``D_k = B_{k-1} (-Q_{k,k})^{-1}``, and
    ``pi_0`` from the level-0 balance equations plus normalization.  Only
    the block sparsity of ``Q`` is used: entries outside those blocks are
    ignored.
    """
    space = space or dyn.space
    blocks = level_block_view(dyn, space)
    L = space.n_levels
    n0 = blocks.diag[0].shape[0]
    prods = [np.eye(n0)]  # prods[k] = D_0 D_1 ... D_k with D_0 = 1
    for k in range(1, L):
        neg = -blocks.diag[k]
        try:
            Dk = np.linalg.solve(neg.T, blocks.up[k - 1].T).T
        except np.linalg.LinAlgError as exc:
            raise SolverError(f"level block Q_{{{k},{k}}} is singular: {exc}") from exc
        prods.append(prods[-1] @ Dk)
    M = sum(P @ blocks.to_root_level[k] for k, P in enumerate(prods))
    s = sum(P.sum(axis=1) for P in prods)
    A = M.copy()
    A[:, 0] = s
    rhs = np.zeros(n0)
    rhs[0] = 1.0
    try:
        pi0 = np.linalg.solve(A.T, rhs)
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"boundary system is singular: {exc}") from exc
    pi = np.concatenate([pi0 @ P for P in prods])
    if not np.all(np.isfinite(pi)):
        raise SolverError("level-recursive solve produced non-finite values")
    return pi


def average_profit(dyn: Dynamics, pi: np.ndarray) -> float:
    f = dyn.f
    if np.all(f == f[0]):
        return float(f[0])
    return float(pi @ f)


def poisson(Q: np.ndarray, pi: np.ndarray, reward: np.ndarray) -> tuple[float, np.ndarray]:
    """Average reward and potential of ``reward`` under ``Q``.

    Returns ``(eta, g)`` with ``Q g = eta e - reward`` and ``pi g = 0``.
    ``Q - e pi`` is nonsingular whenever the stationary law is unique.
    A constant reward is answered exactly: ``eta`` is the constant, ``g = 0``.
    """
    if np.all(reward == reward[0]):
        return float(reward[0]), np.zeros(len(pi))
    eta = float(pi @ reward)
    A = Q - np.outer(np.ones(len(pi)), pi)
    try:
        g = np.linalg.solve(A, eta - reward)
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"singular Poisson system: {exc}") from exc
    return eta, g


def poisson_residual(Q: np.ndarray, g: np.ndarray, eta: float, reward: np.ndarray) -> float:
    return float(np.abs(Q @ g - (eta - reward)).max())


def solve_potential(dyn: Dynamics, pi: np.ndarray, eta: float | None = None) -> np.ndarray:
    f = dyn.f
    eta_f, g = poisson(dyn.Q, pi, f)
    eta = eta_f if eta is None else eta
    res = poisson_residual(dyn.Q, g, eta, f)
    if res > 1e-7 * residual_scale(dyn):
        raise SolverError("Poisson equation not satisfied", res)
    return g


def decompose_potential(dyn: Dynamics, pi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split the potential as ``g = R a + b``.

    ``a`` is the potential of the per-unit-R reward and ``b`` that of the
    cost part.  Neither depends on R.
    """
    _, a = poisson(dyn.Q, pi, dyn.f_R)
    _, b = poisson(dyn.Q, pi, dyn.f_C)
    return a, b


@dataclass
class SolveResult:
    pi: np.ndarray
    eta: float
    g: np.ndarray
    a: np.ndarray
    b: np.ndarray
    residuals: dict[str, float] = field(default_factory=dict)


def solve(dyn: Dynamics) -> SolveResult:
    pi = stationary_direct(dyn)
    eta = average_profit(dyn, pi)
    g = solve_potential(dyn, pi, eta)
    a, b = decompose_potential(dyn, pi)
    R = dyn.params.R
    residuals = {
        "balance": float(np.abs(pi @ dyn.Q).max()),
        "normalization": float(abs(pi.sum() - 1.0)),
        "poisson": poisson_residual(dyn.Q, g, eta, dyn.f),
        "potential_normalization": float(abs(pi @ g)),
        "decomposition": float(np.abs(R * a + b - g).max()),
    }
    return SolveResult(pi, eta, g, a, b, residuals)
