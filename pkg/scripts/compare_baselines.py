"""Algorithm 1 against EGLS and MPSA on the fractional problem (n = 10).

Writes compare.csv (mean VRF per iteration, with time and oracle-call axes)
and compare_summary.csv to --out.

    python scripts/compare_baselines.py [--paths 20] [--out results/baselines]
"""
import argparse
from pathlib import Path

from bregsvi.bench import compare
from bregsvi.config import load_config

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
FILES = ("fractional_linear_s2.ini", "fractional_egls.ini", "fractional_mpsa.ini")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--paths", type=int, default=None)
    ap.add_argument("--out", default="results/baselines")
    args = ap.parse_args()
    cfgs = [load_config(CONFIGS / f).with_run(paths=args.paths) for f in FILES]
    table = compare(cfgs, out=args.out)
    print(f"{'algorithm':<16} {'final VRF':>11} {'oracle calls/path':>18} {'cpu s/path':>10}")
    for s in table["summaries"]:
        r = s.row
        print(f"{r['algorithm']:<16} {r['final_vrf']:>11.4e} {r['oracle_calls'] / r['paths']:>18.0f} "
              f"{r['cpu_ms'] / r['paths'] / 1e3:>10.2f}")
    print(f"traces written to {args.out}/compare.csv")


if __name__ == "__main__":
    main()
