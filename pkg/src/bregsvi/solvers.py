"""Stochastic extragradient solvers.

:class:`Algorithm1`
    Variance-based Bregman extragradient with a stochastic Armijo-type
    line search.  Per iteration: draw ``xi_k`` (``N_k`` samples) and form
    ``F_k``; if ``x_k`` is a fixed point of ``P(x_k, (gamma0/theta) F_k)``
    redraw (at most ``regen_cap`` times, then confirm with a 10x batch and
    declare convergence); draw ``xi_half``; backtrack
    ``gamma = gamma0 * theta**l`` until

        gamma * ||F_k - F_trial(x_half(gamma))|| <= sqrt(alpha * V(x_k, x_half(gamma)))

    with ``x_half(gamma) = P(x_k, gamma F_k)``; finally
    ``x_{k+1} = P(x_k, gamma F(x_half; xi_half))``.

    ``linesearch_sample`` chooses the batch used for ``F_trial``: ``"half"``
    (the default) evaluates trial points on ``xi_half``; ``"current"``
    evaluates them on ``xi_k``, which turns the test into a local Lipschitz
    test of one fixed sampled operator.  Under additive noise the ``"half"``
    test compares two independent noise draws and can fail for every
    ``gamma`` once the iterates are close to a solution; ``"current"`` always
    terminates (see the README).  ``xi_half`` is drawn once per iteration
    either way and feeds the final step.

:class:`EGLS`
    Euclidean extragradient with the ``mu``-line search on ``xi_k``
    (perturbation ``d_k = 0``, no Tikhonov term).

:class:`MPSA`
    Single-sample Bregman extragradient with ``gamma_k = gamma0 / (k + 1)``.

:func:`deterministic_extragradient`
    Exact-operator Bregman extragradient, used for reference solutions.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .bregman import DEFAULT_PROX_TOL, DistanceGenerator, Euclidean, prox_map
from .errors import InvalidParameter, LineSearchExhausted, OracleFailure
from .metrics import IterationRecord, gap_function, natural_residual, relative_error
from .oracle import (PURPOSE_METRIC, Batch, Power08, SampleStream, Schedule, StochasticOracle, draw_batch,
                     evaluate)
from .sets import FeasibleSet

STATUS_COMPLETED = "completed"
STATUS_CONVERGED = "converged"


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class Algorithm1Config:
    gamma0: float = 0.99
    theta: float = 0.01
    alpha: Optional[float] = None  # defaults to the geometry's modulus
    schedule: Schedule = field(default_factory=Power08)
    max_iterations: int = 1000
    linesearch_cap: int = 100
    regen_cap: int = 5
    fixed_point_tol: float = 0.0
    prox_tol: float = DEFAULT_PROX_TOL
    seed: int = 0
    linesearch_sample: str = "half"
    on_exhaustion: str = "raise"
    restart_cap: int = 50
    lipschitz_estimate: Optional[float] = None
    vrf_scale: Optional[float] = None  # defaults to gamma0 / theta
    record_gap: bool = False

    def __post_init__(self):
        if not (0 < self.gamma0 < 1 and 0 < self.theta < 1):
            raise InvalidParameter("need 0 < gamma0 < 1 and 0 < theta < 1")
        if self.alpha is not None and not self.alpha > 0:
            raise InvalidParameter("alpha must be positive")
        if self.max_iterations < 1 or self.linesearch_cap < 1 or self.regen_cap < 0 or self.restart_cap < 0:
            raise InvalidParameter("iteration caps must be positive")
        if self.fixed_point_tol < 0 or self.prox_tol <= 0:
            raise InvalidParameter("tolerances: fixed_point_tol >= 0, prox_tol > 0")
        if self.linesearch_sample not in ("half", "current"):
            raise InvalidParameter("linesearch_sample must be 'half' or 'current'")
        if self.on_exhaustion not in ("raise", "restart"):
            raise InvalidParameter("on_exhaustion must be 'raise' or 'restart'")

    def min_linesearch_cap(self, alpha: float, lipschitz: float) -> int:
        """Smallest cap that can never cut off a search the stepsize floor guarantees."""
        ratio = self.gamma0 * math.sqrt(2.0) * lipschitz / (alpha * self.theta)
        return max(0, math.ceil(math.log(ratio) / math.log(1.0 / self.theta))) if ratio > 1 else 0


@dataclass(frozen=True)
class EGLSConfig:
    gamma0: float = 0.99
    theta: float = 0.01
    mu: float = 0.3
    schedule: Schedule = field(default_factory=Power08)
    max_iterations: int = 1000
    linesearch_cap: int = 100
    prox_tol: float = DEFAULT_PROX_TOL
    seed: int = 0
    vrf_scale: float = 99.0
    record_gap: bool = False

    def __post_init__(self):
        if not (0 < self.gamma0 < 1 and 0 < self.theta < 1):
            raise InvalidParameter("need 0 < gamma0 < 1 and 0 < theta < 1")
        if not 0 < self.mu < 1 / (2 * math.sqrt(2)):
            raise InvalidParameter("mu must lie in (0, 1/(2 sqrt 2))")
        if self.max_iterations < 1 or self.linesearch_cap < 1:
            raise InvalidParameter("iteration caps must be positive")


@dataclass(frozen=True)
class MPSAConfig:
    gamma0: float = 0.99
    max_iterations: int = 1000
    prox_tol: float = DEFAULT_PROX_TOL
    seed: int = 0
    vrf_scale: float = 99.0
    record_gap: bool = False

    def __post_init__(self):
        if not self.gamma0 > 0 or self.max_iterations < 1:
            raise InvalidParameter("MPSA needs gamma0 > 0 and max_iterations >= 1")

    def gamma(self, k: int) -> float:
        return self.gamma0 / (k + 1)


@dataclass(frozen=True)
class DeterministicConfig:
    """Exact-operator extragradient; ``gamma`` defaults to ``1 / (2 L)``."""

    gamma: Optional[float] = None
    max_iterations: int = 1000
    prox_tol: float = 1e-12
    seed: int = 0
    vrf_scale: float = 99.0
    record_gap: bool = False

    def __post_init__(self):
        if self.gamma is not None and not self.gamma > 0:
            raise InvalidParameter("gamma must be positive")
        if self.max_iterations < 1:
            raise InvalidParameter("max_iterations must be >= 1")


# ---------------------------------------------------------------------------
# state and results


@dataclass(frozen=True)
class SolverState:
    x: np.ndarray
    k: int
    stream: SampleStream
    x_half: Optional[np.ndarray] = None
    gamma: Optional[float] = None
    l: Optional[int] = None
    N: Optional[int] = None
    converged: bool = False


@dataclass
class RunResult:
    x: np.ndarray
    trace: list
    status: str
    oracle_calls: int
    final: dict
    wall_ms: float
    algorithm: str
    seed: int


@dataclass(frozen=True)
class Step1Result:
    status: str  # "proceed" | "converged"
    F_hat: Optional[np.ndarray]
    batch: Optional[Batch]
    stream: SampleStream
    regenerations: int
    residual: float


@dataclass(frozen=True)
class LineSearchResult:
    gamma: float
    l: int
    x_half: np.ndarray
    F_trial: np.ndarray
    evaluations: int


@dataclass(frozen=True)
class IterationOutcome:
    state: SolverState
    F_k: Optional[np.ndarray]
    vrf: float
    draws: int
    regenerations: int
    restarts: int


# ---------------------------------------------------------------------------
# building blocks


def linesearch_accepts(gamma: float, F_k, F_trial, divergence: float, alpha: float) -> bool:
    """``gamma^2 ||F_k - F_trial||^2 <= alpha V`` in the underflow-free form
    ``gamma ||F_k - F_trial|| <= sqrt(alpha V)``."""
    return gamma * float(np.linalg.norm(F_k - F_trial)) <= math.sqrt(alpha * max(divergence, 0.0))


def line_search(x, F_k, trial: Callable[[np.ndarray], np.ndarray], geometry: DistanceGenerator,
                set_: FeasibleSet, gamma0: float, theta: float, alpha: float, cap: int,
                prox_tol: float = DEFAULT_PROX_TOL) -> LineSearchResult:
    """Largest ``gamma0 * theta**l`` (``l = 0..cap``) passing the acceptance test.

    ``trial(z)`` returns the operator estimate at a candidate ``z`` (on a
    batch fixed by the caller).  If a candidate coincides with ``x`` the
    search stops: then ``x = P(x, gamma F_k)`` for every ``gamma > 0`` and
    backtracking cannot change the outcome.
    """
    for l in range(cap + 1):
        gamma = gamma0 * theta ** l
        xh = prox_map(geometry, set_, x, gamma * F_k, prox_tol)
        Ft = trial(xh)
        V = geometry.divergence(x, xh)
        if linesearch_accepts(gamma, F_k, Ft, V, alpha):
            return LineSearchResult(gamma, l, xh, Ft, l + 1)
        if V == 0.0:
            raise LineSearchExhausted(f"x_half coincides with x_k at l={l} (stepsize below float resolution or x_k fixed) and the test still fails")
    raise LineSearchExhausted(f"no stepsize accepted within linesearch_cap={cap}")


class _MetricEvaluator:
    """Exact-operator metrics for records (kept outside solver timing)."""

    def __init__(self, oracle, set_, geometry, x_star, record_gap, prox_tol):
        self.oracle, self.set, self.geometry = oracle, set_, geometry
        self.x_star = None if x_star is None else np.asarray(x_star, dtype=float)
        self.record_gap = record_gap
        self.prox_tol = prox_tol

    def operator(self, x, fallback):
        return self.oracle.mean_eval(x) if self.oracle.has_mean else fallback

    def fill(self, x, a, F_fallback) -> dict:
        Fx = self.operator(x, F_fallback)
        out = {"nat_residual": natural_residual(x, Fx, a, self.geometry, self.set, self.prox_tol)}
        out["gap"] = gap_function(x, Fx, self.set) if self.record_gap else None
        out["rel_error"] = relative_error(x, self.x_star) if self.x_star is not None else None
        return out


class StochasticSolver:
    """Shared run loop: iterate, time, record, summarize."""

    name = "solver"

    def __init__(self, oracle: StochasticOracle, set_: FeasibleSet, geometry: DistanceGenerator, config,
                 x_star=None, check_feasibility: bool = True):
        self.oracle, self.set, self.geometry, self.config = oracle, set_, geometry, config
        self.metrics = _MetricEvaluator(oracle, set_, geometry, x_star, config.record_gap, config.prox_tol)
        self.check_feasibility = check_feasibility
        self._last_draw_end = 0

    # subclasses implement iterate(state) -> IterationOutcome
    def iterate(self, state: SolverState) -> IterationOutcome:
        raise NotImplementedError

    def batch_size(self, k: int) -> int:
        raise NotImplementedError

    def vrf_scale(self) -> float:
        return self.config.vrf_scale

    def metric_a(self, state: SolverState) -> float:
        return state.gamma

    def initial_state(self, x0=None) -> SolverState:
        x0 = self.oracle.x0 if x0 is None and hasattr(self.oracle, "x0") else x0
        if x0 is None:
            x0 = self.set.interior_point()
        x0 = np.asarray(x0, dtype=float)
        if not self.set.contains(x0, 1e-9):
            raise InvalidParameter("starting point is not feasible")
        return SolverState(x=x0.copy(), k=0, stream=SampleStream(int(self.config.seed)))

    def _draw(self, stream: SampleStream, N: int) -> tuple[Batch, SampleStream]:
        batch, stream = draw_batch(self.oracle, stream, N)
        lo, hi = batch.draw_range
        assert lo >= self._last_draw_end, "sample ranges overlap"
        self._last_draw_end = hi
        return batch, stream

    def _eval(self, x, batch: Batch, k: int) -> np.ndarray:
        try:
            return evaluate(self.oracle, x, batch)
        except OracleFailure as exc:
            raise OracleFailure(f"iteration {k}: {exc}") from exc

    def _assert_feasible(self, *points):
        if self.check_feasibility:
            tol = max(10 * self.config.prox_tol, 1e-9)
            for p in points:
                if p is not None and not self.set.contains(p, tol):
                    raise AssertionError("iterate left the feasible set beyond prox tolerance")

    def run(self, x0=None, callback=None) -> RunResult:
        state = self.initial_state(x0)
        self._last_draw_end = 0
        trace: list[IterationRecord] = []
        solver_time = 0.0
        status = STATUS_COMPLETED
        terminal = None
        for k in range(self.config.max_iterations):
            t0 = time.perf_counter()
            out = self.iterate(state)
            solver_time += time.perf_counter() - t0
            if out.state.converged:
                status = STATUS_CONVERGED
                state = out.state
                terminal = out.F_k
                break
            prev, state = state, out.state
            self._assert_feasible(state.x, state.x_half)
            m = self.metrics.fill(prev.x, self.metric_a(state), out.F_k)
            rec = IterationRecord(k=k, gamma_k=state.gamma, l_k=state.l, N_k=state.N,
                                  oracle_calls_cum=state.stream.calls, vrf=out.vrf, wall_ms=1e3 * solver_time,
                                  draws=out.draws, regenerations=out.regenerations, restarts=out.restarts, **m)
            trace.append(rec)
            if callback is not None:
                callback(rec)
        final = self.final_metrics(state, trace, terminal)
        return RunResult(x=state.x, trace=trace, status=status, oracle_calls=state.stream.calls, final=final,
                         wall_ms=1e3 * solver_time, algorithm=self.name, seed=int(self.config.seed))

    def final_metrics(self, state: SolverState, trace, terminal=None) -> dict:
        """Metrics at the returned iterate.

        ``terminal`` is the estimate the solver itself drew at its final
        iterate (the batch that certified convergence).  Otherwise no batch
        exists at ``x_K`` yet and the VRF uses a fresh batch of size ``N_K``
        from a separate metric stream, leaving the solver's own sample path
        untouched.
        """
        x = state.x
        if terminal is not None:
            F_hat = terminal
        else:
            mstream = SampleStream(int(self.config.seed), purpose=PURPOSE_METRIC)
            batch, _ = draw_batch(self.oracle, mstream, self.batch_size(state.k))
            F_hat = evaluate(self.oracle, x, batch)
        v = natural_residual(x, F_hat, self.vrf_scale(), self.geometry, self.set, self.config.prox_tol)
        a = trace[-1].gamma_k if trace else getattr(self.config, "gamma0", 1.0)
        m = self.metrics.fill(x, a, F_hat)
        m["vrf"] = v
        m["iterations"] = len(trace)
        return m


# ---------------------------------------------------------------------------
# Algorithm 1


class Algorithm1(StochasticSolver):
    name = "algorithm1"

    def __init__(self, oracle, set_, geometry, config: Algorithm1Config = Algorithm1Config(), x_star=None,
                 check_feasibility: bool = True):
        super().__init__(oracle, set_, geometry, config, x_star, check_feasibility)
        self.alpha = config.alpha if config.alpha is not None else geometry.alpha
        if config.lipschitz_estimate is not None:
            need = config.min_linesearch_cap(self.alpha, config.lipschitz_estimate)
            if config.linesearch_cap < need:
                raise InvalidParameter(f"linesearch_cap={config.linesearch_cap} below the guaranteed need {need}")

    def vrf_scale(self):
        c = self.config
        return c.vrf_scale if c.vrf_scale is not None else c.gamma0 / c.theta

    def batch_size(self, k):
        return self.config.schedule(k)

    def stepsize_floor(self, lipschitz: float) -> float:
        c = self.config
        return min(self.alpha * c.theta / (math.sqrt(2.0) * lipschitz), c.gamma0) if lipschitz > 0 else c.gamma0

    def step1_check(self, state: SolverState) -> Step1Result:
        c = self.config
        N = c.schedule(state.k)
        a = c.gamma0 / c.theta
        stream = state.stream
        regens = 0
        while True:
            batch, stream = self._draw(stream, N)
            F_hat = self._eval(state.x, batch, state.k)
            res = natural_residual(state.x, F_hat, a, self.geometry, self.set, c.prox_tol)
            if res > c.fixed_point_tol:
                return Step1Result("proceed", F_hat, batch, stream, regens, res)
            if regens >= c.regen_cap:
                break
            regens += 1
        # persistent fixed point: confirm with a ten-fold batch before stopping
        batch, stream = self._draw(stream, 10 * N)
        F_hat = self._eval(state.x, batch, state.k)
        res = natural_residual(state.x, F_hat, a, self.geometry, self.set, c.prox_tol)
        status = "converged" if res <= c.fixed_point_tol else "proceed"
        return Step1Result(status, F_hat, batch, stream, regens, res)

    def iterate(self, state: SolverState) -> IterationOutcome:
        c = self.config
        N = c.schedule(state.k)
        start_calls = state.stream.calls
        stream = state.stream
        regens = restarts = 0
        while True:
            s1 = self.step1_check(replace(state, stream=stream))
            regens += s1.regenerations
            stream = s1.stream
            if s1.status == "converged":
                conv = replace(state, stream=stream, converged=True)
                return IterationOutcome(conv, s1.F_hat, s1.residual, stream.calls - start_calls, regens, restarts)
            F_k = s1.F_hat
            half, stream = self._draw(stream, N)
            ls_batch = half if c.linesearch_sample == "half" else s1.batch
            try:
                ls = line_search(state.x, F_k, lambda z: self._eval(z, ls_batch, state.k), self.geometry,
                                 self.set, c.gamma0, c.theta, self.alpha, c.linesearch_cap, c.prox_tol)
                break
            except LineSearchExhausted as exc:
                if c.on_exhaustion == "raise" or restarts >= c.restart_cap:
                    raise LineSearchExhausted(f"iteration {state.k}: {exc} (restarts: {restarts})") from exc
                restarts += 1
        F_half = ls.F_trial if ls_batch is half else self._eval(ls.x_half, half, state.k)
        x_next = prox_map(self.geometry, self.set, state.x, ls.gamma * F_half, c.prox_tol)
        new = SolverState(x=x_next, k=state.k + 1, stream=stream, x_half=ls.x_half, gamma=ls.gamma, l=ls.l, N=N)
        return IterationOutcome(new, F_k, s1.residual, stream.calls - start_calls, regens, restarts)


# ---------------------------------------------------------------------------
# baselines


class EGLS(StochasticSolver):
    name = "egls"

    def batch_size(self, k):
        return self.config.schedule(k)

    def iterate(self, state):
        c = self.config
        N = c.schedule(state.k)
        x = state.x
        start = state.stream.calls
        batch, stream = self._draw(state.stream, N)
        F_k = self._eval(x, batch, state.k)
        for l in range(c.linesearch_cap + 1):
            gamma = c.gamma0 * c.theta ** l
            xh = self.set.project(x - gamma * F_k, c.prox_tol)
            lhs = gamma * float(np.linalg.norm(F_k - self._eval(xh, batch, state.k)))
            dist = float(np.linalg.norm(x - xh))
            if lhs <= c.mu * dist:
                break
            if dist == 0.0:
                raise LineSearchExhausted(f"iteration {state.k}: candidate equals x_k but the test fails")
        else:
            raise LineSearchExhausted(f"iteration {state.k}: no stepsize accepted within linesearch_cap")
        half, stream = self._draw(stream, N)
        x_next = self.set.project(x - gamma * self._eval(xh, half, state.k), c.prox_tol)
        v = natural_residual(x, F_k, c.vrf_scale, self.geometry, self.set, c.prox_tol)
        new = SolverState(x=x_next, k=state.k + 1, stream=stream, x_half=xh, gamma=gamma, l=l, N=N)
        return IterationOutcome(new, F_k, v, stream.calls - start, 0, 0)


class MPSA(StochasticSolver):
    name = "mpsa"

    def batch_size(self, k):
        return 1

    def iterate(self, state):
        c = self.config
        gamma = c.gamma(state.k)
        x = state.x
        start = state.stream.calls
        b1, stream = self._draw(state.stream, 1)
        f_k = self._eval(x, b1, state.k)
        xh = prox_map(self.geometry, self.set, x, gamma * f_k, c.prox_tol)
        b2, stream = self._draw(stream, 1)
        x_next = prox_map(self.geometry, self.set, x, gamma * self._eval(xh, b2, state.k), c.prox_tol)
        v = natural_residual(x, f_k, c.vrf_scale, self.geometry, self.set, c.prox_tol)
        new = SolverState(x=x_next, k=state.k + 1, stream=stream, x_half=xh, gamma=gamma, l=0, N=1)
        return IterationOutcome(new, f_k, v, stream.calls - start, 0, 0)


class DeterministicEG(StochasticSolver):
    """Bregman extragradient on the exact operator, as a traced solver.

    Makes no oracle calls; ``vrf`` is the natural residual with the exact
    operator at ``a = vrf_scale``.
    """

    name = "deterministic"

    def __init__(self, oracle, set_, geometry, config: DeterministicConfig = DeterministicConfig(), x_star=None,
                 check_feasibility: bool = True):
        super().__init__(oracle, set_, geometry, config, x_star, check_feasibility)
        if not oracle.has_mean:
            raise InvalidParameter("deterministic extragradient needs an exact operator (mean_eval)")
        gamma = config.gamma
        if gamma is None:
            L = getattr(oracle, "lipschitz", None)
            if not L:
                raise InvalidParameter("set gamma explicitly: the problem has no Lipschitz estimate")
            gamma = 0.5 / L
        self.gamma = float(gamma)

    def batch_size(self, k):
        return 1

    def iterate(self, state):
        c = self.config
        x = state.x
        Fx = self.oracle.mean_eval(x)
        xh = prox_map(self.geometry, self.set, x, self.gamma * Fx, c.prox_tol)
        x_next = prox_map(self.geometry, self.set, x, self.gamma * self.oracle.mean_eval(xh), c.prox_tol)
        v = natural_residual(x, Fx, c.vrf_scale, self.geometry, self.set, c.prox_tol)
        new = SolverState(x=x_next, k=state.k + 1, stream=state.stream, x_half=xh, gamma=self.gamma, l=0, N=0)
        return IterationOutcome(new, Fx, v, 0, 0, 0)

    def final_metrics(self, state, trace, terminal=None):
        x = state.x
        Fx = self.oracle.mean_eval(x)
        m = self.metrics.fill(x, self.gamma, Fx)
        m["vrf"] = natural_residual(x, Fx, self.config.vrf_scale, self.geometry, self.set, self.config.prox_tol)
        m["iterations"] = len(trace)
        return m


# ---------------------------------------------------------------------------
# deterministic reference solver


@dataclass(frozen=True)
class DeterministicResult:
    x: np.ndarray
    iterations: int
    residual: float
    converged: bool
    residuals: tuple = ()


def deterministic_extragradient(oracle, set_: FeasibleSet, geometry: DistanceGenerator, x0, gamma: float,
                                max_iter: int = 10_000, tol: float = 1e-10, prox_tol: float = 1e-12,
                                F: Optional[Callable] = None, keep_history: bool = False) -> DeterministicResult:
    """``x_half = P(x, gamma F(x))``, ``x+ = P(x, gamma F(x_half))`` until
    ``||x - P(x, gamma F(x))|| / gamma <= tol``."""
    if not gamma > 0:
        raise InvalidParameter("gamma must be positive")
    F = F if F is not None else oracle.mean_eval
    x = np.asarray(x0, dtype=float).copy()
    hist = []
    res = math.inf
    for it in range(max_iter + 1):
        xh = prox_map(geometry, set_, x, gamma * F(x), prox_tol)
        res = float(np.linalg.norm(x - xh)) / gamma
        if keep_history:
            hist.append(res)
        if res <= tol or it == max_iter:
            return DeterministicResult(x, it, res, res <= tol, tuple(hist))
        x = prox_map(geometry, set_, x, gamma * F(xh), prox_tol)
    raise AssertionError("unreachable")


SOLVERS = {"algorithm1": Algorithm1, "egls": EGLS, "mpsa": MPSA, "deterministic": DeterministicEG}
