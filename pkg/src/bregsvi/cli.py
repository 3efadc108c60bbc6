"""Command-line entry point.

    bregsvi solve    --config run.ini [--seed S] [--out DIR] [--quiet]
    bregsvi bench    --config run.ini [--paths N] [--seed BASE] [--out DIR] [--quiet]
    bregsvi compare  --config a.ini --config b.ini [...] [--out DIR] [--paths N] [--quiet]
    bregsvi validate [--quiet]

Exit codes: 0 success, 2 configuration error, 3 solver failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import ConfigError, IncompatibleConfigs, InvalidParameter, SVIError

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 2, 3


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bregsvi", description="Stochastic VI solvers and benchmarks")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, multi=False):
        if multi:
            p.add_argument("--config", action="append", required=True, help="config file (repeatable)")
        else:
            p.add_argument("--config", required=True, help="config file")
        p.add_argument("--seed", type=int, default=None, help="seed (base seed for multi-path runs)")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--quiet", action="store_true")

    common(sub.add_parser("solve", help="one config, one path"))
    b = sub.add_parser("bench", help="multi-path experiment")
    common(b)
    b.add_argument("--paths", type=int, default=None)
    c = sub.add_parser("compare", help="compare configs on a shared problem instance")
    common(c, multi=True)
    c.add_argument("--paths", type=int, default=None)
    v = sub.add_parser("validate", help="run the built-in property checks")
    v.add_argument("--quiet", action="store_true")
    return ap


def _solve(args) -> int:
    from .bench import run_path, write_trace
    from .config import load_config

    cfg = load_config(args.config)
    seed = args.seed if args.seed is not None else cfg.base_seed
    problem = cfg.build_problem()
    res = run_path(cfg, seed, problem)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_trace(out / f"path_{seed}.csv", res.trace)
        (out / "result.json").write_text(json.dumps(
            {"status": res.status, "oracle_calls": res.oracle_calls, "final": res.final, "seed": seed,
             "spec_hash": problem.spec_hash(), "x": res.x.tolist()}, indent=2, default=float))
    if not args.quiet:
        f = res.final
        print(f"status={res.status} iterations={len(res.trace)} oracle_calls={res.oracle_calls} "
              f"vrf={f['vrf']:.4e} nat_residual={f['nat_residual']:.4e}"
              + (f" rel_error={f['rel_error']:.4e}" if f.get("rel_error") is not None else ""))
    return EXIT_OK


def _bench(args) -> int:
    from .bench import format_summary, run_experiment
    from .config import load_config

    cfg = load_config(args.config).with_run(paths=args.paths, base_seed=args.seed)
    out = args.out or cfg.out
    s = run_experiment(cfg, out=out, quiet=args.quiet)
    if not args.quiet:
        print(format_summary(s.row))
        for seed, err in s.failures.items():
            print(f"path {seed} failed: {err}", file=sys.stderr)
    return EXIT_OK


def _compare(args) -> int:
    from .bench import compare, format_summary
    from .config import load_config

    cfgs = [load_config(p).with_run(paths=args.paths, base_seed=args.seed) for p in args.config]
    table = compare(cfgs, out=args.out, quiet=args.quiet)
    if not args.quiet:
        for s in table["summaries"]:
            print(format_summary(s.row))
    return EXIT_OK


def _validate(args) -> int:
    from .validate import run_all

    return EXIT_OK if run_all(verbose=not args.quiet) else EXIT_SOLVER


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    handlers = {"solve": _solve, "bench": _bench, "compare": _compare, "validate": _validate}
    try:
        return handlers[args.command](args)
    except (ConfigError, IncompatibleConfigs, InvalidParameter) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SVIError as exc:
        print(f"solver failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
