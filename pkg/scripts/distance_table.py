"""Effect of the distance generating function on the fractional problems.

Runs Algorithm 1 with the shifted entropy (s1), squared Euclidean norm (s2)
and the p-norm generator (s3), plus the exponential-denominator variant.

    python scripts/distance_table.py [--paths 5]
"""
import argparse
from pathlib import Path

from bregsvi.bench import run_experiment
from bregsvi.config import load_config

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
FILES = ("fractional_linear_s1.ini", "fractional_linear_s2.ini", "fractional_linear_s3.ini",
         "fractional_exponential_s2.ini")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--paths", type=int, default=5)
    args = ap.parse_args()
    print(f"{'config':<28} {'generator':<10} {'final VRF':>11} {'iterations':>10} {'cpu s/path':>10}")
    for f in FILES:
        cfg = load_config(CONFIGS / f).with_run(paths=args.paths)
        s = run_experiment(cfg)
        iters = sum(len(r.trace) for r in s.results) / len(s.results)
        r = s.row
        print(f"{Path(f).stem:<28} {cfg.geometry['kind']:<10} {r['final_vrf']:>11.4e} {iters:>10.0f} "
              f"{r['cpu_ms'] / r['paths'] / 1e3:>10.2f}")


if __name__ == "__main__":
    main()
