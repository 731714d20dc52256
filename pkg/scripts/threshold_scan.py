"""Scan random parameter sets for the sign of a_bar, the b_bar value and interior maxima.

For each draw the script evaluates a_bar and b_bar on a p grid and checks
whether eta has an interior maximum over that grid at a random reward.

    python3 scripts/threshold_scan.py --draws 300 --seed 0
"""

import argparse
import warnings
from collections import Counter

import numpy as np

from pegsense import ModelParams, build, linear_coefficients, solve
from pegsense.model import HonestMinorityWarning
from pegsense.solve import residual_scale


def draw(rng):
    a1 = rng.uniform(0.3, 1.5)
    return ModelParams(alpha1=a1, alpha2_tilde=rng.uniform(0, a1), tau=rng.uniform(0, 0.5),
                       gamma=rng.uniform(0, 0.5 * a1), mu=rng.uniform(0.2, 3.0),
                       c_P=rng.uniform(0, 1), c_A=rng.uniform(0, 1), r_B=rng.uniform(0, 4),
                       r_F=0.0, m=int(rng.integers(3, 11)))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--draws", type=int, default=300)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--n-points", type=int, default=21)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    grid = np.linspace(0, 1, args.n_points)
    signs = Counter()
    max_b = 0.0
    interior = Counter()
    regimes = Counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", HonestMinorityWarning)
        for _ in range(args.draws):
            params = draw(rng)
            regime = "honest-majority" if params.lambda2 < params.lambda1 else "dishonest-majority"
            regimes[regime] += 1
            a_signs = set()
            etas = []
            for p in grid:
                dyn = build(params, p)
                res = solve(dyn)
                a_bar, b_bar = linear_coefficients(dyn, res.a, res.b, res.pi)
                a_signs.add(int(np.sign(a_bar)))
                max_b = max(max_b, abs(b_bar))
                etas.append(res.eta)
            etas = np.array(etas)
            signs[tuple(sorted(a_signs))] += 1
            tol = 1e-10 * residual_scale(build(params, 0.5))
            k = int(np.argmax(etas))
            if 0 < k < len(grid) - 1 and etas[k] - max(etas[0], etas[-1]) > tol:
                interior[regime] += 1

    print(f"draws: {args.draws}")
    for key, n in sorted(signs.items()):
        print(f"  sign(a_bar) over grid {key}: {n}")
    print(f"max |b_bar| across all draws and p: {max_b:.3e}")
    for regime, n in sorted(regimes.items()):
        print(f"  {regime}: {n} draws, {interior[regime]} with an interior maximum of eta")


if __name__ == "__main__":
    main()
