"""Nash-Cournot table: mean relative error of Algorithm 1 after K iterations.

    python scripts/reproduce_nash.py [--paths 20] [--out results/nash]
"""
import argparse
from pathlib import Path

from bregsvi.bench import format_summary, run_experiment
from bregsvi.config import load_config

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--paths", type=int, default=None)
    ap.add_argument("--out", default=None)
    args = ap.parse_args()
    print(f"{'K':>6} {'paths':>5} {'mean rel. error':>16} {'oracle calls/path':>18} {'cpu s/path':>10}")
    for name in ("nash_k1000.ini", "nash_k5000.ini"):
        cfg = load_config(CONFIGS / name).with_run(paths=args.paths)
        out = None if args.out is None else Path(args.out) / cfg.name
        s = run_experiment(cfg, out=out)
        r = s.row
        print(f"{cfg.K:>6} {r['paths']:>5} {r['final_rel_error']:>16.4e} {r['oracle_calls'] / r['paths']:>18.0f} "
              f"{r['cpu_ms'] / r['paths'] / 1e3:>10.2f}")
        if args.out:
            print("   ", format_summary(r))


if __name__ == "__main__":
    main()
