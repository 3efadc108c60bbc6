"""Empirical convergence rate and oracle complexity on the affine problem.

Fits the running minimum of the seed-averaged squared natural residual and
of the mean gap against k on log-log axes, and reports the oracle calls
needed to reach a natural residual eps.

    python scripts/rate_experiment.py [--paths 10] [--K 2000]
"""
import argparse
from pathlib import Path

import numpy as np

from bregsvi.bench import run_experiment
from bregsvi.config import load_config
from bregsvi.metrics import fit_running_min

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--paths", type=int, default=None)
    ap.add_argument("--K", type=int, default=None)
    ap.add_argument("--out", default=None)
    args = ap.parse_args()
    cfg = load_config(CONFIGS / "affine_rate.ini").with_run(paths=args.paths, K=args.K)
    s = run_experiment(cfg, out=args.out)
    ks = np.array([m["k"] for m in s.mean])
    r2 = np.array([np.mean([r.trace[k].nat_residual ** 2 for r in s.results]) for k in ks])
    gap = np.array([m["gap"] for m in s.mean])
    lo = 50 if cfg.K > 500 else 5
    for label, values in (("R^2", r2), ("gap", gap)):
        fit = fit_running_min(ks, values, lo, cfg.K, min_decades=1.0)
        print(f"{label:>4}: slope {fit.slope:+.3f}  r^2 {fit.r2:.3f}  (k in [{lo}, {cfg.K}])")
    print(f"{'eps':>8} {'mean oracle calls':>18}")
    for eps in (1e-1, 3e-2, 1e-2):
        hits = [next((x.oracle_calls_cum for x in r.trace if x.nat_residual <= eps), None) for r in s.results]
        hits = [h for h in hits if h is not None]
        print(f"{eps:>8.0e} {np.mean(hits) if hits else float('nan'):>18.0f}  ({len(hits)}/{len(s.results)} paths)")


if __name__ == "__main__":
    main()
