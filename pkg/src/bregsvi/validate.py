"""Quick self-check of the core properties, runnable without pytest.

Each check returns ``(name, passed, detail)``; ``run_all`` executes them in
order.  The full property suites live in the test-suite; this is the subset
that is cheap enough to run on every install.
"""
from __future__ import annotations

import math
import time
from typing import Callable

import numpy as np

from .bregman import Euclidean, PNorm, ShiftedEntropy, prox_generic, prox_map, three_point_identity_check
from .metrics import natural_residual
from .oracle import LogPower, Power08, SampleStream, empirical_mean
from .problems import AffineProblem, FractionalProblem
from .sets import Box, L1Ball, PolyhedronCapL1, Simplex
from .solvers import Algorithm1, Algorithm1Config

_CHECKS: list[tuple[str, Callable[[], tuple[bool, str]]]] = []


def check(name):
    def deco(fn):
        _CHECKS.append((name, fn))
        return fn
    return deco


def _rng():
    return np.random.default_rng(12345)


@check("bregman: nonnegativity and strong-convexity bound")
def _bregman_bounds():
    rng = _rng()
    worst = math.inf
    for gen in (Euclidean(2.0), ShiftedEntropy(0.01), PNorm(10)):
        for _ in range(200):
            x, z = rng.uniform(0, 1, 10), rng.uniform(0, 1, 10)
            v = gen.divergence(x, z)
            worst = min(worst, v - 0.5 * gen.alpha * float((x - z) @ (x - z)))
    return worst >= -1e-12, f"min slack {worst:.2e}"


@check("bregman: three-point identity (closed-form proxes)")
def _three_point():
    rng = _rng()
    worst = 0.0
    cases = [(Euclidean(1.0), Box.uniform(5, -1, 1)), (ShiftedEntropy(0.01), Simplex(5)),
             (ShiftedEntropy(0.0), Simplex(5))]
    for gen, st in cases:
        for _ in range(50):
            x, u = rng.uniform(0.05, 1, 5), rng.uniform(0.05, 1, 5)
            if isinstance(st, Simplex):
                x, u = x / x.sum(), u / u.sum()
            worst = max(worst, three_point_identity_check(gen, st, x, rng.normal(size=5), u, 1e-12))
    return worst <= 1e-10, f"max residual {worst:.2e}"


@check("prox: closed forms agree with the generic inner solver")
def _prox_agree():
    rng = _rng()
    worst = 0.0
    for gen, st in [(ShiftedEntropy(0.01), Simplex(4)), (PNorm(4), Box.uniform(4, 0, 1)),
                    (PNorm(4, symmetric=True), L1Ball(4))]:
        x = st.project(rng.uniform(0.1, 0.3, 4))
        r = rng.normal(size=4)
        worst = max(worst, float(np.abs(prox_map(gen, st, x, r) - prox_generic(gen, st, x, r, 1e-11)).max()))
    return worst <= 1e-6, f"max deviation {worst:.2e}"


@check("sets: polyhedron projection is feasible")
def _poly():
    rng = _rng()
    P = PolyhedronCapL1(rng.normal(size=(2, 6)), np.abs(rng.normal(size=2)) + 1, 1.0)
    ok = all(P.contains(P.project(rng.normal(size=6) * 3, 1e-10), 1e-8) for _ in range(20))
    return ok, "20 random projections"


@check("oracle: reproducible batch means")
def _repro():
    p = FractionalProblem(n=6, instance_seed=3)
    a, _ = empirical_mean(p, p.x0, SampleStream(7), 50)
    b, _ = empirical_mean(p, p.x0, SampleStream(7), 50)
    return bool(np.array_equal(a, b)), "bitwise equal"


@check("schedules: reference values")
def _sched():
    return Power08()(999) == 252 and LogPower(1, 2.05, 1e-4)(0) == 2, "Power08(999)=252, LogPower(0)=2"


@check("algorithm 1: fixed point and descent on a noise-free affine problem")
def _alg1():
    p = AffineProblem(n=5, condition=10, noise=0.0, instance_seed=1)
    geo = Euclidean(2.0)
    res0 = natural_residual(p.x_star, p.mean_eval(p.x_star), 1.0, geo, p.feasible_set)
    cfg = Algorithm1Config(theta=0.5, max_iterations=50, linesearch_sample="current", seed=0)
    start = Algorithm1(p, p.feasible_set, geo, cfg).run(x0=p.x_star)
    run = Algorithm1(p, p.feasible_set, geo, cfg, x_star=p.x_star).run()
    ok = res0 == 0.0 and start.status == "converged" and run.trace[-1].rel_error < run.trace[0].rel_error
    return ok, f"start-at-solution status {start.status}, rel. error {run.trace[-1].rel_error:.2e}"


def run_all(verbose: bool = True) -> bool:
    all_ok = True
    for name, fn in _CHECKS:
        t0 = time.perf_counter()
        try:
            ok, detail = fn()
        except Exception as exc:  # a crashing check is a failed check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        all_ok &= bool(ok)
        if verbose:
            print(f"[{'PASS' if ok else 'FAIL'}] {name} ({detail}; {time.perf_counter() - t0:.2f}s)")
    return all_ok
