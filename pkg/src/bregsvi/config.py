"""Experiment configuration: one INI-style file with sections
``[problem]``, ``[algorithm]``, ``[geometry]``, ``[schedule]`` and ``[run]``.

Example::

    [problem]
    kind = nash
    I = 10
    J = 10
    instance_seed = 0

    [algorithm]
    name = algorithm1
    gamma0 = 0.99
    theta = 0.01
    linesearch_sample = current

    [geometry]
    kind = euclidean
    alpha = 2.0

    [schedule]
    kind = power
    power = 0.8
    mult = 2

    [run]
    K = 1000
    paths = 20
    base_seed = 0

Unknown sections or keys are rejected with :class:`ConfigError`, so typos
cannot silently fall back to defaults.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from .bregman import DistanceGenerator, Euclidean, PNorm, ShiftedEntropy
from .errors import ConfigError, SVIError
from .oracle import Constant, LogPower, Power, Schedule
from .problems import AffineProblem, FractionalProblem, NashCournot, Problem

SECTIONS = ("problem", "algorithm", "geometry", "schedule", "run")

_PROBLEM_KEYS = {
    "nash": {"kind": str, "i": int, "j": int, "instance_seed": int, "cap": float,
             "a_low": float, "a_high": float, "c_low": float, "c_high": float},
    "fractional": {"kind": str, "n": int, "instance_seed": int, "denominator": str, "radius": float},
    "affine": {"kind": str, "n": int, "instance_seed": int, "condition": float, "noise": float, "rank": int,
               "skew": float},
}
_ALGO_KEYS = {
    "algorithm1": {"name": str, "gamma0": float, "theta": float, "alpha": float, "linesearch_cap": int,
                   "regen_cap": int, "fixed_point_tol": float, "prox_tol": float, "linesearch_sample": str,
                   "on_exhaustion": str, "restart_cap": int, "vrf_scale": float, "record_gap": bool,
                   "lipschitz_estimate": float},
    "egls": {"name": str, "gamma0": float, "theta": float, "mu": float, "linesearch_cap": int, "prox_tol": float,
             "vrf_scale": float, "record_gap": bool},
    "mpsa": {"name": str, "gamma0": float, "prox_tol": float, "vrf_scale": float, "record_gap": bool},
    "deterministic": {"name": str, "gamma": float, "prox_tol": float, "vrf_scale": float, "record_gap": bool},
}
_GEOM_KEYS = {
    "euclidean": {"kind": str, "alpha": float},
    "entropy": {"kind": str, "alpha": float, "sigma": float, "upper": float, "lower": float},
    "pnorm": {"kind": str, "alpha": float, "bound": float, "symmetric": bool},
}
_SCHED_KEYS = {
    "power": {"kind": str, "power": float, "mult": int, "divisor": float},
    "logpower": {"kind": str, "n": int, "lam": float, "b": float, "scale": float},
    "constant": {"kind": str, "n": int},
}
_RUN_KEYS = {"k": int, "paths": int, "base_seed": int, "out": str, "workers": int, "label": str}


def _coerce(section: str, key: str, raw: str, typ) -> Any:
    try:
        if typ is bool:
            low = raw.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if typ is int:
            return int(raw)
        return typ(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: cannot parse {raw!r} as {typ.__name__}") from None


def _typed(section: str, items: dict, table: dict) -> dict:
    unknown = set(items) - set(table)
    if unknown:
        raise ConfigError(f"[{section}] unknown keys: {', '.join(sorted(unknown))}")
    return {k: _coerce(section, k, v, table[k]) for k, v in items.items()}


@dataclass(frozen=True)
class ExperimentConfig:
    problem: dict
    algorithm: dict
    geometry: dict = field(default_factory=lambda: {"kind": "euclidean", "alpha": 2.0})
    schedule: dict = field(default_factory=lambda: {"kind": "power", "power": 0.8})
    K: int = 1000
    paths: int = 20
    base_seed: int = 0
    out: Optional[str] = None
    workers: int = 1
    label: Optional[str] = None
    source: Optional[str] = None

    def __post_init__(self):
        if self.K < 1 or self.paths < 1 or self.workers < 1:
            raise ConfigError("[run] K, paths and workers must be >= 1")
        if not 0 <= self.base_seed < 2 ** 64 - self.paths:
            raise ConfigError("[run] base_seed must be an unsigned 64-bit integer")

    @property
    def name(self) -> str:
        return self.label or self.algorithm["name"]

    def with_run(self, **kw) -> "ExperimentConfig":
        from dataclasses import replace
        return replace(self, **{k: v for k, v in kw.items() if v is not None})

    # -- builders ------------------------------------------------------------
    def build_problem(self) -> Problem:
        p = dict(self.problem)
        kind = p.pop("kind")
        try:
            if kind == "nash":
                a = (p.pop("a_low", 30.0), p.pop("a_high", 60.0))
                c = (p.pop("c_low", 2.0), p.pop("c_high", 6.0))
                return NashCournot(I=p.pop("i", 10), J=p.pop("j", 10), a_bounds=a, c_bounds=c, **p)
            if kind == "fractional":
                return FractionalProblem(**p)
            if kind == "affine":
                return AffineProblem(**p)
        except SVIError as exc:
            raise ConfigError(f"[problem] {exc}") from exc
        raise ConfigError(f"[problem] unknown kind {kind!r}")

    def build_geometry(self, problem: Optional[Problem] = None) -> DistanceGenerator:
        g = dict(self.geometry)
        kind = g.pop("kind")
        alpha = g.pop("alpha", 2.0)
        try:
            if kind == "euclidean":
                return Euclidean(alpha)
            if kind == "entropy":
                return ShiftedEntropy.with_modulus(alpha, sigma=g.get("sigma", 1e-2), upper=g.get("upper", 1.0),
                                                   lower=g.get("lower", 0.0))
            if kind == "pnorm":
                n = problem.dim if problem is not None else 2
                return PNorm.with_modulus(alpha, n=max(n, 2), bound=g.get("bound", 1.0),
                                          symmetric=g.get("symmetric", False))
        except SVIError as exc:
            raise ConfigError(f"[geometry] {exc}") from exc
        raise ConfigError(f"[geometry] unknown kind {kind!r}")

    def build_schedule(self) -> Schedule:
        s = dict(self.schedule)
        kind = s.pop("kind")
        try:
            if kind == "power":
                return Power(s.get("power", 0.8), s.get("mult", 1), s.get("divisor", 1.0))
            if kind == "logpower":
                return LogPower(s.get("n", 1), s.get("lam", 2.05), s.get("b", 1e-4), s.get("scale", 1.0))
            if kind == "constant":
                return Constant(s.get("n", 1))
        except SVIError as exc:
            raise ConfigError(f"[schedule] {exc}") from exc
        raise ConfigError(f"[schedule] unknown kind {kind!r}")

    def solver_config(self, seed: int):
        from .solvers import Algorithm1Config, DeterministicConfig, EGLSConfig, MPSAConfig

        a = dict(self.algorithm)
        name = a.pop("name")
        common = {"max_iterations": self.K, "seed": int(seed)}
        try:
            if name == "algorithm1":
                return Algorithm1Config(schedule=self.build_schedule(), **common, **a)
            if name == "egls":
                return EGLSConfig(schedule=self.build_schedule(), **common, **a)
            if name == "mpsa":
                return MPSAConfig(**common, **a)
            if name == "deterministic":
                return DeterministicConfig(**common, **a)
        except SVIError as exc:
            raise ConfigError(f"[algorithm] {exc}") from exc
        raise ConfigError(f"[algorithm] unknown name {name!r}")

    def to_ini(self) -> str:
        cp = configparser.ConfigParser()
        for sec, body in (("problem", self.problem), ("algorithm", self.algorithm), ("geometry", self.geometry),
                          ("schedule", self.schedule)):
            cp[sec] = {k: _fmt(v) for k, v in body.items()}
        run = {"K": self.K, "paths": self.paths, "base_seed": self.base_seed, "workers": self.workers}
        if self.out:
            run["out"] = self.out
        if self.label:
            run["label"] = self.label
        cp["run"] = {k: _fmt(v) for k, v in run.items()}
        import io
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def parse_config(text: str, source: Optional[str] = None) -> ExperimentConfig:
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text, source=source or "<config>")
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    extra = set(cp.sections()) - set(SECTIONS)
    if extra:
        raise ConfigError(f"unknown sections: {', '.join(sorted(extra))}")
    for sec in ("problem", "algorithm"):
        if not cp.has_section(sec):
            raise ConfigError(f"missing required section [{sec}]")

    def section(name, tables, selector):
        items = dict(cp[name]) if cp.has_section(name) else {}
        if not items:
            return None
        key = items.get(selector)
        if key is None:
            raise ConfigError(f"[{name}] needs '{selector}'")
        if key not in tables:
            raise ConfigError(f"[{name}] unknown {selector} {key!r}; expected one of {sorted(tables)}")
        return _typed(name, items, tables[key])

    problem = section("problem", _PROBLEM_KEYS, "kind")
    algorithm = section("algorithm", _ALGO_KEYS, "name")
    geometry = section("geometry", _GEOM_KEYS, "kind") or {"kind": "euclidean", "alpha": 2.0}
    schedule = section("schedule", _SCHED_KEYS, "kind") or {"kind": "power", "power": 0.8}
    run = _typed("run", dict(cp["run"]) if cp.has_section("run") else {}, _RUN_KEYS)
    return ExperimentConfig(problem=problem, algorithm=algorithm, geometry=geometry, schedule=schedule,
                            K=run.get("k", 1000), paths=run.get("paths", 20), base_seed=run.get("base_seed", 0),
                            out=run.get("out"), workers=run.get("workers", 1), label=run.get("label"),
                            source=source)


def load_config(path) -> ExperimentConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc}") from exc
    return parse_config(text, source=str(p))
