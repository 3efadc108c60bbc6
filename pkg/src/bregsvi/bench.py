"""Multi-path experiments, summaries and algorithm comparisons.

Output layout of :func:`run_experiment` (when an output directory is given)::

    <out>/path_<seed>.csv   per-path trace (CSV_COLUMNS order)
    <out>/mean_trace.csv    per-k mean over paths
    <out>/summary.csv       one row for the experiment
    <out>/metadata.json     config echo, problem description and hash, failures
"""
from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .config import ExperimentConfig
from .errors import DegenerateFit, IncompatibleConfigs, SVIError
from .metrics import CSV_COLUMNS, IterationRecord, fit_running_min, mean_trace
from .solvers import SOLVERS, RunResult

SUMMARY_COLUMNS = ("problem", "n", "K", "algorithm", "paths", "failed", "final_vrf", "final_nat_residual",
                   "final_rel_error", "final_gap", "cpu_ms", "oracle_calls", "rate_slope", "spec_hash")


class ExperimentFailed(SVIError):
    """Every path of an experiment failed."""


# ---------------------------------------------------------------------------
# CSV I/O


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_trace(path, records: Sequence[IterationRecord]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for r in records:
            w.writerow([_cell(v) for v in r.row()])


_INT_COLS = {"k", "l_k", "N_k", "oracle_calls_cum"}


def read_trace(path) -> list[IterationRecord]:
    out = []
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd)
        if tuple(header) != CSV_COLUMNS:
            raise ValueError(f"unexpected trace header {header}")
        for row in rd:
            vals = {}
            for c, v in zip(header, row):
                if v == "":
                    vals[c] = None
                elif c in _INT_COLS:
                    vals[c] = int(v)
                else:
                    vals[c] = float(v)
            out.append(IterationRecord(**vals))
    return out


def write_rows(path, columns: Sequence[str], rows: Sequence[dict]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow([_cell(row.get(c)) for c in columns])


def read_rows(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# ---------------------------------------------------------------------------
# running


def build(config: ExperimentConfig, seed: int, problem=None, x_star=None):
    """Instantiate (problem, solver) for one path."""
    problem = problem if problem is not None else config.build_problem()
    geometry = config.build_geometry(problem)
    scfg = config.solver_config(seed)
    if x_star is None:
        x_star = problem.reference_solution()
    solver = SOLVERS[config.algorithm["name"]](problem, problem.feasible_set, geometry, scfg, x_star=x_star)
    return problem, solver


def run_path(config: ExperimentConfig, seed: int, problem=None, x_star=None) -> RunResult:
    _, solver = build(config, seed, problem, x_star)
    return solver.run()


def _run_path_safe(args):
    config, seed = args
    try:
        return seed, run_path(config, seed), None
    except SVIError as exc:
        return seed, None, f"{type(exc).__name__}: {exc}"


@dataclass
class ExperimentSummary:
    config: ExperimentConfig
    problem: dict
    spec_hash: str
    results: list = field(default_factory=list)  # RunResult per successful path
    failures: dict = field(default_factory=dict)  # seed -> message
    mean: list = field(default_factory=list)
    row: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return bool(self.results)


def _rate_slope(mean_rows: list, K: int) -> Optional[float]:
    ks = np.array([r["k"] for r in mean_rows])
    vals = np.array([r["nat_residual"] ** 2 for r in mean_rows])
    lo = max(1, K // 200)
    try:
        with np.errstate(divide="ignore"):
            return fit_running_min(ks, vals, lo, K - 1).slope
    except DegenerateFit:
        return None


def _mean_final(results, key) -> Optional[float]:
    vals = [r.final.get(key) for r in results if r.final.get(key) is not None]
    return float(np.mean(vals)) if vals else None


def run_experiment(config: ExperimentConfig, out=None, quiet: bool = True) -> ExperimentSummary:
    """Run ``config.paths`` paths with seeds ``base_seed, base_seed+1, ...``."""
    problem = config.build_problem()
    x_star = problem.reference_solution()
    seeds = [config.base_seed + p for p in range(config.paths)]
    summary = ExperimentSummary(config, problem.describe(), problem.spec_hash())
    if config.workers > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            outcomes = list(pool.map(_run_path_safe, [(config, s) for s in seeds]))
    else:
        outcomes = []
        for s in seeds:
            try:
                outcomes.append((s, run_path(config, s, problem, x_star), None))
            except SVIError as exc:
                outcomes.append((s, None, f"{type(exc).__name__}: {exc}"))
            if not quiet:
                _, res, err = outcomes[-1]
                msg = err if err else f"final vrf {res.final['vrf']:.3e}, calls {res.oracle_calls}"
                print(f"[{config.name}] seed {s}: {msg}")
    for s, res, err in outcomes:
        if err is None:
            summary.results.append(res)
        else:
            summary.failures[s] = err
    if summary.results:
        summary.mean = mean_trace([r.trace for r in summary.results])
    res = summary.results
    summary.row = {
        "problem": summary.problem["kind"],
        "n": problem.dim,
        "K": config.K,
        "algorithm": config.name,
        "paths": len(res),
        "failed": len(summary.failures),
        "final_vrf": _mean_final(res, "vrf"),
        "final_nat_residual": _mean_final(res, "nat_residual"),
        "final_rel_error": _mean_final(res, "rel_error"),
        "final_gap": _mean_final(res, "gap"),
        "cpu_ms": float(sum(r.wall_ms for r in res)) if res else None,
        "oracle_calls": int(sum(r.oracle_calls for r in res)) if res else None,
        "rate_slope": _rate_slope(summary.mean, config.K) if summary.mean else None,
        "spec_hash": summary.spec_hash,
    }
    if out is not None:
        write_experiment(summary, out)
    if not summary.ok:
        raise ExperimentFailed(f"all {config.paths} paths failed; first error: {next(iter(summary.failures.values()))}")
    return summary


def write_experiment(summary: ExperimentSummary, out) -> Path:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    for r in summary.results:
        write_trace(out / f"path_{r.seed}.csv", r.trace)
    if summary.mean:
        write_rows(out / "mean_trace.csv", CSV_COLUMNS, summary.mean)
    write_rows(out / "summary.csv", SUMMARY_COLUMNS, [summary.row])
    meta = {
        "config": summary.config.to_ini(),
        "problem": summary.problem,
        "spec_hash": summary.spec_hash,
        "failures": {str(k): v for k, v in summary.failures.items()},
        "status": {str(r.seed): r.status for r in summary.results},
        "final": {str(r.seed): r.final for r in summary.results},
    }
    (out / "metadata.json").write_text(json.dumps(meta, indent=2, default=float))
    return out


# ---------------------------------------------------------------------------
# comparison


def compare(configs: Sequence[ExperimentConfig], out=None, quiet: bool = True) -> dict:
    """Run several experiments on one shared problem instance and align
    their mean VRF traces by iteration (and record their time axes)."""
    if not configs:
        raise IncompatibleConfigs("nothing to compare")
    hashes = {c.build_problem().spec_hash() for c in configs}
    if len(hashes) != 1:
        raise IncompatibleConfigs("configs describe different problem instances")
    labels = [c.name for c in configs]
    if len(set(labels)) != len(labels):
        raise IncompatibleConfigs("configs need distinct labels ([run] label = ...)")
    summaries = []
    for c in configs:
        sub = None if out is None else Path(out) / c.name
        summaries.append(run_experiment(c, out=sub, quiet=quiet))
    K = max(len(s.mean) for s in summaries)
    columns = ["k"]
    for lab in labels:
        columns += [f"{lab}_vrf", f"{lab}_wall_ms", f"{lab}_oracle_calls_cum"]
    rows = []
    for k in range(K):
        row = {"k": k}
        for lab, s in zip(labels, summaries):
            if k < len(s.mean):
                m = s.mean[k]
                row.update({f"{lab}_vrf": m["vrf"], f"{lab}_wall_ms": m["wall_ms"],
                            f"{lab}_oracle_calls_cum": m["oracle_calls_cum"]})
        rows.append(row)
    table = {"columns": columns, "rows": rows, "summaries": summaries, "spec_hash": hashes.pop()}
    if out is not None:
        Path(out).mkdir(parents=True, exist_ok=True)
        write_rows(Path(out) / "compare.csv", columns, rows)
        write_rows(Path(out) / "compare_summary.csv", SUMMARY_COLUMNS, [s.row for s in summaries])
    return table


def format_summary(row: dict) -> str:
    def f(v):
        if v is None:
            return "-"
        if isinstance(v, float):
            return f"{v:.4g}" if math.isfinite(v) else str(v)
        return str(v)
    return "  ".join(f"{c}={f(row.get(c))}" for c in SUMMARY_COLUMNS)
