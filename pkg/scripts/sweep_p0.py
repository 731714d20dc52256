"""Sweep eta(p) for the P0 parameter set at several rewards and print verdicts.

    python3 scripts/sweep_p0.py [--out results/sweep_p0.csv]
"""

import argparse
import csv
from pathlib import Path

from pegsense import ModelParams, sweep

P0 = ModelParams(alpha1=0.6, alpha2_tilde=0.3, tau=0.2, gamma=0.05, mu=2.0,
                 c_P=0.5, c_A=0.3, r_B=1.0, r_F=0.2, m=5)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", type=Path)
    ap.add_argument("--R", type=float, nargs="+", default=[0.0, 0.5, 1.2, 3.0])
    ap.add_argument("--n-points", type=int, default=21)
    args = ap.parse_args()

    grid = [i / (args.n_points - 1) for i in range(args.n_points)]
    res = sweep(P0, grid, args.R)
    for R in args.R:
        etas = res.etas(R)
        print(f"R={R:<6g} verdict={res.verdicts[R]:<10} eta(0)={etas[0]:+.6f} eta(1)={etas[-1]:+.6f}")
    print(f"R_star spread over the grid: {res.R_star_spread}")
    if args.out:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        with args.out.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["R", "p", "eta", "d_eta_dp", "sign"])
            for r in res.rows:
                w.writerow([repr(r.R), repr(r.p), repr(r.eta), repr(r.d_eta_dp), r.sign])


if __name__ == "__main__":
    main()
