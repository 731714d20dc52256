"""Performance difference, policy derivative and the reward threshold."""

from __future__ import annotations

import enum
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from .dynamics import Dynamics, build
from .model import ModelParams, Policy, ValidationError
from .solve import SolveResult, average_profit, residual_scale, solve, stationary_direct

INDIFFERENCE_BAND = 1e-12
FLAT_BAND = 1e-10


class Recommendation(str, enum.Enum):
    PEG_IMMEDIATELY = "PegImmediately"  # p* = 1
    WITHHOLD_TO_CAP = "WithholdToCap"  # p* = 0
    INDIFFERENT = "Indifferent"


def _check_same_model(d1: Dynamics, d2: Dynamics) -> None:
    if d1.params != d2.params or d1.space.m != d2.space.m:
        raise ValidationError("both policies must be evaluated on the same model parameters")


def performance_difference(dyn_p: Dynamics, res_p: SolveResult, dyn_q: Dynamics, pi_q: np.ndarray,
                           g: np.ndarray | None = None) -> float:
    """``eta_q - eta_p`` from the potential of ``p`` and the stationary law of ``q``."""
    _check_same_model(dyn_p, dyn_q)
    g = res_p.g if g is None else g
    return float(pi_q @ ((dyn_q.Q - dyn_p.Q) @ g + (dyn_q.f - dyn_p.f)))


def policy_gradient(dyn: Dynamics, res: SolveResult, g: np.ndarray | None = None) -> np.ndarray:
    """Per-state derivative of eta w.r.t. each state's pegging probability.

    Zero outside A1.  Summing gives the derivative for a shared scalar p.
    """
    g = res.g if g is None else g
    return res.pi * (dyn.dQ_dp @ g + dyn.df_dp)


def policy_derivative(dyn: Dynamics, res: SolveResult, g: np.ndarray | None = None) -> float:
    return float(policy_gradient(dyn, res, g).sum())


def linear_coefficients(dyn: Dynamics, a: np.ndarray, b: np.ndarray, pi: np.ndarray) -> tuple[float, float]:
    """``(a_bar, b_bar)`` with ``d eta / dp = a_bar R + b_bar``."""
    a_bar = float(pi @ (dyn.dQ_dp @ a + dyn.df_R_dp))
    b_bar = float(pi @ (dyn.dQ_dp @ b))
    return a_bar, b_bar


def threshold(a_bar: float, b_bar: float, mu: float) -> float | None:
    if abs(a_bar) > INDIFFERENCE_BAND * mu:
        return -b_bar / a_bar + 0.0  # + 0.0 turns -0.0 into 0.0
    return None


def threshold_and_recommend(a_bar: float, b_bar: float, R: float, mu: float = 1.0) -> Recommendation:
    value = a_bar * R + b_bar
    if abs(value) <= INDIFFERENCE_BAND * mu * max(1.0, R):
        return Recommendation.INDIFFERENT
    return Recommendation.PEG_IMMEDIATELY if value > 0 else Recommendation.WITHHOLD_TO_CAP


@dataclass
class SensitivityReport:
    p: float
    R: float
    eta: float
    d_eta_dp: float
    a_bar: float
    b_bar: float
    R_star: float | None
    recommendation: Recommendation
    notes: list[str] = field(default_factory=list)

    @property
    def a_bar_sign(self) -> int:
        return int(np.sign(self.a_bar))

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "R": self.R,
            "eta": self.eta,
            "d_eta_dp": self.d_eta_dp,
            "a_bar": self.a_bar,
            "b_bar": self.b_bar,
            "a_bar_sign": self.a_bar_sign,
            "R_star": self.R_star,
            "recommendation": self.recommendation.value,
            "notes": list(self.notes),
        }


def sensitivity_report(params: ModelParams, p: float, dyn: Dynamics | None = None,
                       res: SolveResult | None = None) -> SensitivityReport:
    dyn = dyn or build(params, p)
    res = res or solve(dyn)
    d_eta = policy_derivative(dyn, res)
    a_bar, b_bar = linear_coefficients(dyn, res.a, res.b, res.pi)
    R, mu = params.R, params.mu
    R_star = threshold(a_bar, b_bar, mu)
    rec = threshold_and_recommend(a_bar, b_bar, R, mu)
    notes = []
    if R_star is None:
        notes.append(f"R_star undefined: |a_bar| = {abs(a_bar):.3e} is below {INDIFFERENCE_BAND:g}*mu")
    if a_bar < 0 and R_star is not None:
        notes.append("a_bar < 0: pegging pays off for R below R_star instead of above it")
    if b_bar == 0.0 and R_star is not None:
        notes.append("b_bar = 0 (cost rate is state-independent): R_star collapses to 0")
    return SensitivityReport(float(p), R, res.eta, d_eta, a_bar, b_bar, R_star, rec, notes)


def verdict(etas: Sequence[float], scale: float) -> str:
    etas = np.asarray(etas, dtype=float)
    tol = FLAT_BAND * scale
    if etas.max() - etas.min() <= tol:
        return "flat"
    steps = np.diff(etas)
    if np.all(steps > 0):
        return "increasing"
    if np.all(steps < 0):
        return "decreasing"
    return "mixed"


@dataclass
class SweepRow:
    R: float
    p: float
    eta: float
    d_eta_dp: float

    @property
    def sign(self) -> int:
        return int(np.sign(self.d_eta_dp))


@dataclass
class SweepResult:
    rows: list[SweepRow]
    verdicts: dict[float, str]
    sign_sets: dict[float, list[int]]
    R_star_by_p: list[tuple[float, float | None]]

    @property
    def R_star_spread(self) -> float | None:
        vals = [r for _, r in self.R_star_by_p if r is not None]
        return (max(vals) - min(vals)) if vals else None

    def etas(self, R: float) -> list[float]:
        return [row.eta for row in self.rows if row.R == R]


def sweep(params: ModelParams, p_grid: Sequence[float], R_list: Sequence[float]) -> SweepResult:
    if len(p_grid) == 0 or len(R_list) == 0:
        raise ValidationError("sweep needs a non-empty p grid and R list")
    p_grid = sorted(float(p) for p in p_grid)
    for p in p_grid:
        if not 0.0 <= p <= 1.0:
            raise ValidationError(f"p grid value {p} outside [0, 1]")
    for R in R_list:
        if R < 0:
            raise ValidationError(f"R value {R} must be ≥ 0")
    rows: list[SweepRow] = []
    verdicts: dict[float, str] = {}
    sign_sets: dict[float, list[int]] = {}
    for R in R_list:
        prm = params.with_reward(R)
        block = []
        for p in p_grid:
            dyn = build(prm, p)
            res = solve(dyn)
            block.append(SweepRow(float(R), p, res.eta, policy_derivative(dyn, res)))
        rows.extend(block)
        scale = residual_scale(build(prm, p_grid[0]))
        verdicts[float(R)] = verdict([r.eta for r in block], scale)
        sign_sets[float(R)] = sorted({r.sign for r in block})
    R_star_by_p = []
    for p in p_grid:
        dyn = build(params, p)
        res = solve(dyn)
        a_bar, b_bar = linear_coefficients(dyn, res.a, res.b, res.pi)
        R_star_by_p.append((p, threshold(a_bar, b_bar, params.mu)))
    return SweepResult(rows, verdicts, sign_sets, R_star_by_p)


@dataclass
class OptimalPolicy:
    p_star: float | None  # None when indifferent
    eta: float
    recommendation: Recommendation
    eta_at_0: float
    eta_at_1: float
    consistent: bool
    diagnostic: str | None = None


def endpoint_choice(eta0: float, eta1: float, scale: float) -> Recommendation:
    if abs(eta1 - eta0) <= FLAT_BAND * scale:
        return Recommendation.INDIFFERENT
    return Recommendation.PEG_IMMEDIATELY if eta1 > eta0 else Recommendation.WITHHOLD_TO_CAP


def optimal_policy(params: ModelParams, R: float | None = None, p_eval: float = 0.5) -> OptimalPolicy:
    """Best pegging policy, from the derivative sign and checked at both endpoints.

    A disagreement between the two is reported in ``diagnostic``; the
    endpoint comparison decides ``p_star`` either way.
    """
    prm = params if R is None else params.with_reward(R)
    report = sensitivity_report(prm, p_eval)
    etas = []
    for p in (0.0, 1.0):
        dyn = build(prm, p)
        etas.append(average_profit(dyn, stationary_direct(dyn)))
    scale = residual_scale(build(prm, p_eval))
    by_endpoints = endpoint_choice(etas[0], etas[1], scale)
    consistent = by_endpoints is report.recommendation
    diagnostic = None
    if not consistent:
        diagnostic = (f"derivative sign at p={p_eval} recommends {report.recommendation.value} "
                      f"but endpoint comparison gives {by_endpoints.value}")
    p_star = {Recommendation.PEG_IMMEDIATELY: 1.0, Recommendation.WITHHOLD_TO_CAP: 0.0}.get(by_endpoints)
    return OptimalPolicy(p_star, max(etas), by_endpoints, etas[0], etas[1], consistent, diagnostic)


def per_state_gradient(params: ModelParams, policy: Policy) -> dict[str, float]:
    dyn = build(params, policy)
    res = solve(dyn)
    grad = policy_gradient(dyn, res)
    return {s.key(): float(grad[dyn.space.index(s)]) for s in policy.controlled_states(dyn.space)}
