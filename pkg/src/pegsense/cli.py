"""Command line entry point.

Exit codes: 0 success, 1 a validation check failed, 2 bad config,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from .config import ExperimentConfig, load_config
from .dynamics import build
from .model import Policy, ValidationError
from .sensitivity import optimal_policy, per_state_gradient, sensitivity_report, sweep
from .sim import SimConfig, UnderSampleError, simulate
from .solve import SolverError, solve, stationary_level_recursive
from .validation import run_suite

EXIT_OK, EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


def _g17(x: float) -> str:
    return format(float(x), ".17g")


def _policy_dict(policy: Policy) -> dict:
    if policy.is_scalar:
        return {"p": policy.p}
    return {"per_state": {s.key(): v for s, v in policy.per_state.items()}, "default": policy.default}


def _by_state(space, vec) -> dict:
    return {k: float(v) for k, v in zip(space.keys(), vec)}


def _single_or_list(results: list[dict], head: dict) -> dict:
    if len(results) == 1:
        return {**head, **results[0]}
    return {**head, "results": results}


def solve_report(cfg: ExperimentConfig) -> dict:
    results = []
    for R in cfg.rewards():
        prm = cfg.params.with_reward(R)
        dyn = build(prm, cfg.policy)
        res = solve(dyn)
        residuals = dict(res.residuals)
        residuals["level_recursive_max_abs_diff"] = float(np.abs(stationary_level_recursive(dyn) - res.pi).max())
        results.append({
            "R": R,
            "n_states": dyn.n,
            "eta": res.eta,
            "pi": _by_state(dyn.space, res.pi),
            "g": _by_state(dyn.space, res.g),
            "a": _by_state(dyn.space, res.a),
            "b": _by_state(dyn.space, res.b),
            "residuals": residuals,
        })
    return _single_or_list(results, {"params": cfg.params.to_dict(), "policy": _policy_dict(cfg.policy)})


def solve_csv(cfg: ExperimentConfig) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["R", "n1", "n2", "region", "pi", "g", "a", "b"])
    for R in cfg.rewards():
        dyn = build(cfg.params.with_reward(R), cfg.policy)
        res = solve(dyn)
        for i, (s, region) in enumerate(zip(dyn.space.states, dyn.space.regions)):
            w.writerow([_g17(R), s.n1, s.n2, region.value, _g17(res.pi[i]), _g17(res.g[i]),
                        _g17(res.a[i]), _g17(res.b[i])])
    return out.getvalue()


def sensitivity_dict(cfg: ExperimentConfig) -> dict:
    results = []
    p_eval = cfg.policy.p if cfg.policy.is_scalar else 0.5
    for R in cfg.rewards():
        prm = cfg.params.with_reward(R)
        dyn = build(prm, cfg.policy)
        rep = sensitivity_report(prm, p_eval, dyn=dyn)
        d = rep.to_dict()
        if not cfg.policy.is_scalar:
            d["p"] = None
            d["gradient"] = per_state_gradient(prm, cfg.policy)
        if rep.R_star is None:
            d.pop("R_star")
            d["R_star_reason"] = rep.notes[0]
        opt = optimal_policy(prm, p_eval=p_eval)
        d["optimal"] = {
            "p_star": opt.p_star,
            "eta": opt.eta,
            "recommendation": opt.recommendation.value,
            "eta_at_0": opt.eta_at_0,
            "eta_at_1": opt.eta_at_1,
            "consistent": opt.consistent,
            "diagnostic": opt.diagnostic,
        }
        results.append(d)
    return _single_or_list(results, {"params": cfg.params.to_dict(), "policy": _policy_dict(cfg.policy)})


def sweep_outputs(cfg: ExperimentConfig) -> tuple[str, dict]:
    result = sweep(cfg.params, cfg.sweep.p_grid, cfg.rewards())
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["R", "p", "eta", "d_eta_dp", "sign"])
    for row in result.rows:
        w.writerow([_g17(row.R), _g17(row.p), _g17(row.eta), _g17(row.d_eta_dp), row.sign])
    sidecar = {
        "params": cfg.params.to_dict(),
        "p_grid": list(cfg.sweep.p_grid),
        "verdicts": [{"R": R, "verdict": v, "signs": result.sign_sets[R]} for R, v in result.verdicts.items()],
        "R_star_by_p": [{"p": p, "R_star": r} for p, r in result.R_star_by_p],
        "R_star_spread": result.R_star_spread,
    }
    return out.getvalue(), sidecar


def simulate_dict(cfg: ExperimentConfig, seed: int | None) -> dict:
    spec = cfg.simulate
    seed = spec.seed if seed is None else seed
    sim_cfg = SimConfig(seed=seed, n_cycles=spec.n_cycles, horizon=spec.horizon, accounting=spec.accounting)
    results = []
    for R in cfg.rewards():
        prm = cfg.params.with_reward(R)
        est = simulate(prm, cfg.policy, sim_cfg)
        dyn = build(prm, cfg.policy)
        eta = solve(dyn).eta
        d = est.to_dict()
        d["R"] = R
        d["eta_analytic"] = eta
        d["z_score"] = (est.eta_hat - eta) / est.std_err if est.std_err > 0 else None
        results.append(d)
    head = {"params": cfg.params.to_dict(), "policy": _policy_dict(cfg.policy), "seed": seed,
            "mode": sim_cfg.mode}
    return _single_or_list(results, head)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pegsense", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in [("solve", "stationary law, average profit and potentials"),
                        ("sensitivity", "policy derivative, threshold and optimal policy"),
                        ("sweep", "eta and its derivative over a p grid, per R"),
                        ("simulate", "Monte Carlo estimate of the average profit"),
                        ("validate", "run the self-check suite")]:
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", required=True, help="JSON experiment config")
        sp.add_argument("--out", help="output path (stdout when omitted)")
        sp.add_argument("--format", choices=["csv", "json"],
                        default={"sweep": "csv", "validate": None}.get(name, "json"),
                        help="validate prints pass/fail lines unless json is requested")
        if name == "simulate":
            sp.add_argument("--seed", type=int, help="overrides simulate.seed in the config")
    return parser


def run(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.command == "simulate" and args.seed is not None and not 0 <= args.seed < 2**64:
            raise ValidationError("seed must be an unsigned 64-bit integer")
        if args.format == "csv" and args.command not in ("solve", "sweep"):
            raise ValidationError(f"--format csv is not available for {args.command}")

        if args.command == "solve":
            _emit(solve_csv(cfg) if args.format == "csv" else _dump(solve_report(cfg)), args.out)
        elif args.command == "sensitivity":
            _emit(_dump(sensitivity_dict(cfg)), args.out)
        elif args.command == "sweep":
            table, sidecar = sweep_outputs(cfg)
            if args.format == "json":
                _emit(_dump({**sidecar, "csv": table}), args.out)
            else:
                _emit(table, args.out)
                if args.out:
                    Path(str(args.out) + ".verdict.json").write_text(_dump(sidecar))
        elif args.command == "simulate":
            _emit(_dump(simulate_dict(cfg, args.seed)), args.out)
        elif args.command == "validate":
            v = cfg.validate
            checks = run_suite(cfg.params, cfg.policy, cfg.rewards(), seed=v.seed, n_pairs=v.n_pairs,
                               n_derivative_points=v.n_derivative_points, mc_cycles=v.mc_cycles,
                               corrupt_generator=v.corrupt_generator)
            ok = all(c.passed for c in checks)
            report = {"passed": ok, "checks": [c.to_dict() for c in checks]}
            if args.format == "json" and not args.out:
                sys.stdout.write(_dump(report))
            else:
                for c in checks:
                    print(c.line())
                if args.out:
                    Path(args.out).write_text(_dump(report))
            return EXIT_OK if ok else EXIT_CHECK_FAILED
    except ValidationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, UnderSampleError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
