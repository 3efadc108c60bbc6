"""Merit functions and empirical-rate fitting.

* natural residual ``R_a(x, H) = ||x - P(x, a H)||`` (zero exactly at solutions);
* gap ``g(x) = F(x)^T x - min_{z in X} F(x)^T z`` (bounded sets only);
* VRF: the natural residual evaluated with a batch estimate ``F_hat`` and
  ``a = gamma0 / theta`` -- the quantity solvers report as they go;
* log-log least-squares rate fits on running minima.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import Iterable, Optional, Sequence

import numpy as np

from .bregman import DEFAULT_PROX_TOL, DistanceGenerator, prox_map
from .errors import DegenerateFit, InvalidParameter, Unbounded
from .sets import FeasibleSet

CSV_COLUMNS = ("k", "gamma_k", "l_k", "N_k", "oracle_calls_cum", "vrf", "nat_residual", "gap", "rel_error", "wall_ms")


@dataclass
class IterationRecord:
    """Per-iteration measurements describing iterate ``x_k``.

    ``gamma_k``/``l_k`` are the stepsize and backtracking exponent accepted at
    iteration ``k``; ``oracle_calls_cum`` counts calls up to and including
    iteration ``k``; ``wall_ms`` is cumulative solver time (metric evaluation
    excluded).
    """

    k: int
    gamma_k: float
    l_k: int
    N_k: int
    oracle_calls_cum: int
    vrf: float
    nat_residual: float
    gap: Optional[float] = None
    rel_error: Optional[float] = None
    wall_ms: float = 0.0
    # bookkeeping that is not part of the CSV contract
    draws: int = 0
    regenerations: int = 0
    restarts: int = 0

    def row(self) -> list:
        return [getattr(self, c) for c in CSV_COLUMNS]


def natural_residual(x, H, a: float, geometry: DistanceGenerator, set_: FeasibleSet,
                     tol: float = DEFAULT_PROX_TOL) -> float:
    if not a > 0:
        raise InvalidParameter("a must be positive")
    x = np.asarray(x, dtype=float)
    return float(np.linalg.norm(x - prox_map(geometry, set_, x, a * np.asarray(H, dtype=float), tol)))


def vrf(x, F_hat, gamma0: float, theta: float, geometry: DistanceGenerator, set_: FeasibleSet,
        tol: float = DEFAULT_PROX_TOL) -> float:
    """``||x - P(x, F_hat * gamma0 / theta)||``."""
    return natural_residual(x, F_hat, gamma0 / theta, geometry, set_, tol)


def gap_function(x, Fx, set_: FeasibleSet) -> float:
    """``sup_{z in X} <F(x), x - z>``; tiny negative LP round-off is clipped to 0."""
    if not set_.bounded:
        raise Unbounded("gap function needs a bounded feasible set; use the natural residual")
    x, Fx = np.asarray(x, dtype=float), np.asarray(Fx, dtype=float)
    _, low = set_.linear_minimize(Fx)
    g = float(Fx @ x) - low
    return max(g, 0.0) if g > -1e-9 * (1.0 + abs(low)) else g


def relative_error(x, x_star) -> float:
    x_star = np.asarray(x_star, dtype=float)
    den = float(np.linalg.norm(x_star))
    num = float(np.linalg.norm(np.asarray(x, dtype=float) - x_star))
    return num / den if den > 0 else num


def running_min(values: Sequence[float]) -> np.ndarray:
    return np.minimum.accumulate(np.asarray(values, dtype=float))


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r2: float

    def __iter__(self):
        return iter((self.slope, self.intercept, self.r2))


def fit_rate(trace: Iterable[tuple[float, float]], min_points: int = 10, min_decades: float = 2.0) -> RateFit:
    """Least squares of ``log(value)`` on ``log(k + 1)``.

    Raises :class:`DegenerateFit` for fewer than ``min_points`` points,
    nonpositive values, or when ``k + 1`` spans fewer than ``min_decades``
    decades.
    """
    pts = np.asarray(list(trace), dtype=float)
    if pts.ndim != 2 or len(pts) < min_points:
        raise DegenerateFit(f"need at least {min_points} points")
    k, v = pts[:, 0], pts[:, 1]
    if np.any(~np.isfinite(v)) or np.any(v <= 0):
        raise DegenerateFit("values must be positive and finite for a log-log fit")
    lx, ly = np.log(k + 1.0), np.log(v)
    if (lx.max() - lx.min()) / math.log(10.0) < min_decades - 1e-12:
        raise DegenerateFit(f"k+1 spans fewer than {min_decades} decades")
    A = np.column_stack([lx, np.ones_like(lx)])
    (slope, intercept), *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = ly - (slope * lx + intercept)
    sst = float(((ly - ly.mean()) ** 2).sum())
    r2 = 1.0 - float(resid @ resid) / sst if sst > 0 else 1.0
    return RateFit(float(slope), float(intercept), r2)


def fit_running_min(ks: Sequence[int], values: Sequence[float], k_min: int, k_max: int,
                    min_decades: float = 2.0) -> RateFit:
    """Fit the running minimum of ``values`` restricted to ``k_min <= k <= k_max``."""
    ks = np.asarray(ks)
    rm = running_min(values)
    mask = (ks >= k_min) & (ks <= k_max)
    return fit_rate(zip(ks[mask], rm[mask]), min_decades=min_decades)


def mean_trace(traces: Sequence[Sequence[IterationRecord]]) -> list[dict]:
    """Per-``k`` mean over the paths that reached iteration ``k``.

    Optional columns are averaged over the paths where they are present and
    left empty (``None``) otherwise.
    """
    by_k: dict[int, list[IterationRecord]] = {}
    for tr in traces:
        for rec in tr:
            by_k.setdefault(rec.k, []).append(rec)
    out = []
    for k in sorted(by_k):
        recs = by_k[k]
        row = {"k": k}
        for c in CSV_COLUMNS[1:]:
            vals = [getattr(r, c) for r in recs if getattr(r, c) is not None]
            row[c] = float(np.mean(vals)) if vals else None
        row["paths"] = len(recs)
        out.append(row)
    return out


def record_field_names() -> list[str]:
    return [f.name for f in fields(IterationRecord)]
