"""Self-check suite: every analytic quantity against an independent route."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .dynamics import Dynamics, build
from .model import ModelParams, Policy
from .sensitivity import linear_coefficients, performance_difference, policy_derivative
from .sim import SimConfig, simulate
from .solve import average_profit, residual_scale, solve, stationary_direct, stationary_level_recursive

LEVEL_P_GRID = (0.0, 0.25, 0.5, 0.75, 0.99)
FD_STEP = 1e-6


@dataclass
class CheckResult:
    name: str
    R: float
    passed: bool
    residual: float
    tolerance: float
    detail: str = ""

    def __post_init__(self):
        self.passed = bool(self.passed)
        self.residual = float(self.residual)

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag} {self.name} [R={self.R:g}] residual={self.residual:.3e} tol={self.tolerance:.1e} {self.detail}".rstrip()

    def to_dict(self) -> dict:
        d = asdict(self)
        if not math.isfinite(d["residual"]):
            d["residual"] = None
        return d


def corrupt_generator(dyn: Dynamics, scale: float = 0.1) -> Dynamics:
    """Add a conservative jump (3,3) -> (1,1) that the level blocks cannot hold.

    Used as a fault injection: the direct solve sees it, the level-recursive
    solve does not, so the two must disagree.
    """
    Q = dyn.Q.copy()
    i, j = dyn.space.index((3, 3)), dyn.space.index((1, 1))
    rate = scale * dyn.params.mu
    Q[i, j] += rate
    Q[i, i] -= rate
    return dyn.with_Q(Q)


def rel_err(x: float, ref: float, floor: float) -> float:
    return abs(x - ref) / max(abs(ref), floor)


def eta_at(params: ModelParams, p: float) -> float:
    dyn = build(params, p)
    return average_profit(dyn, stationary_direct(dyn))


def fd_derivative(params: ModelParams, p: float, h: float = FD_STEP) -> float:
    if p - h < 0.0:
        return (eta_at(params, p + h) - eta_at(params, p)) / h
    if p + h > 1.0:
        return (eta_at(params, p) - eta_at(params, p - h)) / h
    return (eta_at(params, p + h) - eta_at(params, p - h)) / (2 * h)


def check_generator(params: ModelParams, p: float) -> CheckResult:
    dyn = build(params, p)
    Q = dyn.Q
    off = Q - np.diag(np.diag(Q))
    res = float(max(np.abs(Q.sum(axis=1)).max(), np.abs(dyn.dQ_dp.sum(axis=1)).max()))
    ok = res <= 1e-12 and off.min() >= 0.0
    return CheckResult("generator_conservative", params.R, ok, res, 1e-12,
                       "" if off.min() >= 0 else "negative off-diagonal rate")


def check_level_recursive(params: ModelParams, corrupt: bool = False) -> CheckResult:
    worst = 0.0
    for p in LEVEL_P_GRID:
        dyn = build(params, p)
        if corrupt:
            dyn = corrupt_generator(dyn)
        try:
            direct = stationary_direct(dyn)
        except Exception as exc:  # a corrupted generator may not even solve
            return CheckResult("level_recursive_vs_direct", params.R, False, math.inf, 1e-10, f"direct solve failed: {exc}")
        worst = max(worst, float(np.abs(stationary_level_recursive(dyn) - direct).max()))
    return CheckResult("level_recursive_vs_direct", params.R, worst <= 1e-10, worst, 1e-10)


def check_difference_equation(params: ModelParams, rng: np.random.Generator, n_pairs: int) -> CheckResult:
    scale = residual_scale(build(params, 0.5))
    floor = 1e-6 * scale
    worst = 0.0
    for p, q in rng.random((n_pairs, 2)):
        dp, dq = build(params, p), build(params, q)
        res_p = solve(dp)
        pi_q = stationary_direct(dq)
        lhs = performance_difference(dp, res_p, dq, pi_q)
        direct = average_profit(dq, pi_q) - res_p.eta
        worst = max(worst, rel_err(lhs, direct, floor))
    return CheckResult("difference_equation", params.R, worst <= 1e-9, worst, 1e-9, f"{n_pairs} random pairs")


def check_derivative(params: ModelParams, rng: np.random.Generator, n_points: int) -> CheckResult:
    worst = 0.0
    ok = True
    for p in rng.random(n_points):
        dyn = build(params, p)
        analytic = policy_derivative(dyn, solve(dyn))
        fd = fd_derivative(params, float(p))
        err = abs(analytic - fd)
        r = err / abs(fd) if fd != 0 else (0.0 if err == 0 else math.inf)
        worst = max(worst, r)
        # near zero the relative error is meaningless; fall back to absolute
        ok &= r <= 1e-4 or err <= 1e-9
    return CheckResult("derivative_vs_finite_difference", params.R, ok, worst, 1e-4, f"{n_points} random p")


def check_linearity(params: ModelParams, p: float) -> CheckResult:
    Rs = (0.5, 1.0, 1.5)
    ds = []
    for R in Rs:
        dyn = build(params.with_reward(R), p)
        ds.append(policy_derivative(dyn, solve(dyn)))
    mag = max(abs(d) for d in ds) or 1.0
    collinear = abs(ds[1] - 0.5 * (ds[0] + ds[2])) / mag
    dyn = build(params, p)
    res = solve(dyn)
    a_bar, b_bar = linear_coefficients(dyn, res.a, res.b, res.pi)
    d = policy_derivative(dyn, res)
    recon = abs(a_bar * params.R + b_bar - d) / max(abs(d), 1e-300) if d != 0 else abs(a_bar * params.R + b_bar)
    worst = max(collinear, recon)
    return CheckResult("linearity_in_R", params.R, worst <= 1e-9, worst, 1e-9, f"p={p:g}")


def check_potential(params: ModelParams, p: float) -> CheckResult:
    dyn = build(params, p)
    res = solve(dyn)
    scale = residual_scale(dyn)
    worst = max(res.residuals["poisson"], res.residuals["decomposition"], res.residuals["potential_normalization"]) / scale
    return CheckResult("potential_poisson", params.R, worst <= 1e-9, worst, 1e-9, f"p={p:g}")


def check_shift_invariance(params: ModelParams, p: float, q: float, c: float = 17.3) -> CheckResult:
    dp, dq = build(params, p), build(params, q)
    res_p = solve(dp)
    pi_q = stationary_direct(dq)
    d0 = policy_derivative(dp, res_p)
    d1 = policy_derivative(dp, res_p, res_p.g + c)
    e0 = performance_difference(dp, res_p, dq, pi_q)
    e1 = performance_difference(dp, res_p, dq, pi_q, res_p.g + c)
    worst = max(abs(d1 - d0), abs(e1 - e0))
    return CheckResult("shift_invariance", params.R, worst <= 1e-12, worst, 1e-12, f"c={c}")


def check_monte_carlo(params: ModelParams, policy: Policy, n_cycles: int, seed: int) -> CheckResult:
    dyn = build(params, policy)
    eta = average_profit(dyn, stationary_direct(dyn))
    est = simulate(params, policy, SimConfig(seed=seed, n_cycles=n_cycles))
    diff = abs(est.eta_hat - eta)
    if params.R == 0:
        return CheckResult("monte_carlo_vs_analytic", params.R, diff == 0.0 and est.std_err == 0.0, diff, 0.0,
                           "R=0 must reproduce -C exactly")
    z = diff / est.std_err if est.std_err > 0 else math.inf
    return CheckResult("monte_carlo_vs_analytic", params.R, z <= 3.0, z, 3.0,
                       f"eta_hat={est.eta_hat:.6g} eta={eta:.6g} se={est.std_err:.3g} (residual in std errors)")


def run_suite(params: ModelParams, policy: Policy, R_values, *, seed: int = 0, n_pairs: int = 20,
              n_derivative_points: int = 10, mc_cycles: int = 200_000, corrupt_generator: bool = False
              ) -> list[CheckResult]:
    p_eval = policy.p if policy.is_scalar else 0.5
    results = []
    for R in R_values:
        prm = params.with_reward(R)
        rng = np.random.default_rng(seed)
        results.append(check_generator(prm, p_eval))
        results.append(check_level_recursive(prm, corrupt=corrupt_generator))
        results.append(check_difference_equation(prm, rng, n_pairs))
        results.append(check_derivative(prm, rng, n_derivative_points))
        results.append(check_linearity(prm, p_eval))
        results.append(check_potential(prm, p_eval))
        results.append(check_shift_invariance(prm, p_eval, 1.0 - p_eval if p_eval != 0.5 else 0.8))
        if mc_cycles > 0:
            results.append(check_monte_carlo(prm, policy, mc_cycles, seed))
    return results
