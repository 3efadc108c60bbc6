"""Closed convex feasible sets: membership, Euclidean projection and
linear minimization.

All sets are immutable after construction.  ``project`` is exact for
boxes, simplices and l1-balls; the polyhedron-cap-l1 set falls back to
Dykstra's alternating projections.
"""
from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, InnerSolverFailure, Infeasible, InvalidParameter, Unbounded
from .lp import linprog_dense


def _readonly(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def project_simplex(v: np.ndarray, radius: float = 1.0) -> np.ndarray:
    """Euclidean projection onto {z >= 0, sum(z) = radius} (sort-based)."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - radius
    idx = np.arange(1, v.size + 1)
    rho = np.count_nonzero(u - css / idx > 0)
    tau = css[rho - 1] / rho
    return np.maximum(v - tau, 0.0)


def project_l1_ball(v: np.ndarray, radius: float = 1.0) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if np.abs(v).sum() <= radius:
        return v.copy()
    return np.sign(v) * project_simplex(np.abs(v), radius)


class FeasibleSet(ABC):
    dim: int

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise DimensionMismatch(f"expected a vector of length {self.dim}, got shape {x.shape}")
        return x

    @abstractmethod
    def contains(self, x, tol: float = 0.0) -> bool: ...

    @abstractmethod
    def project(self, x, tol: float = 1e-10) -> np.ndarray: ...

    @abstractmethod
    def linear_minimize(self, c) -> tuple[np.ndarray, float]: ...

    @abstractmethod
    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Coordinatewise bounding box of the set."""

    @abstractmethod
    def describe(self) -> dict: ...

    @property
    def bounded(self) -> bool:
        lo, hi = self.bounds()
        return bool(np.all(np.isfinite(lo)) and np.all(np.isfinite(hi)))

    def interior_point(self) -> np.ndarray:
        """Some point of the set, used as a default starting iterate."""
        lo, hi = self.bounds()
        return self.project(np.clip(np.zeros(self.dim), lo, hi))


@dataclass(frozen=True, eq=False)
class Box(FeasibleSet):
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo, hi = np.atleast_1d(np.asarray(self.lower, float)), np.atleast_1d(np.asarray(self.upper, float))
        if lo.shape != hi.shape:
            raise DimensionMismatch("lower and upper bounds differ in shape")
        if np.any(lo > hi):
            raise InvalidParameter("box requires lower <= upper")
        object.__setattr__(self, "lower", _readonly(lo))
        object.__setattr__(self, "upper", _readonly(hi))

    @classmethod
    def uniform(cls, dim: int, lower: float, upper: float) -> "Box":
        return cls(np.full(dim, float(lower)), np.full(dim, float(upper)))

    @property
    def dim(self) -> int:
        return self.lower.size

    def contains(self, x, tol=0.0):
        x = self._check(x)
        return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))

    def project(self, x, tol=1e-10):
        return np.clip(self._check(x), self.lower, self.upper)

    def linear_minimize(self, c):
        c = self._check(c)
        if not self.bounded:
            raise Unbounded("linear minimization over an unbounded box")
        z = np.where(c > 0, self.lower, self.upper)
        return z, float(c @ z)

    def bounds(self):
        return self.lower, self.upper

    def describe(self):
        return {"kind": "box", "lower": self.lower.tolist(), "upper": self.upper.tolist()}


@dataclass(frozen=True, eq=False)
class Simplex(FeasibleSet):
    """{x >= 0, sum(x) = radius}."""

    dim: int
    radius: float = 1.0

    def __post_init__(self):
        if self.dim < 1 or self.radius <= 0:
            raise InvalidParameter("simplex needs dim >= 1 and radius > 0")

    def contains(self, x, tol=0.0):
        x = self._check(x)
        return bool(np.all(x >= -tol) and abs(x.sum() - self.radius) <= tol)

    def project(self, x, tol=1e-10):
        return project_simplex(self._check(x), self.radius)

    def linear_minimize(self, c):
        c = self._check(c)
        j = int(np.argmin(c))
        z = np.zeros(self.dim)
        z[j] = self.radius
        return z, float(self.radius * c[j])

    def bounds(self):
        return np.zeros(self.dim), np.full(self.dim, float(self.radius))

    def interior_point(self):
        return np.full(self.dim, self.radius / self.dim)

    def describe(self):
        return {"kind": "simplex", "dim": self.dim, "radius": self.radius}


@dataclass(frozen=True, eq=False)
class L1Ball(FeasibleSet):
    dim: int
    radius: float = 1.0

    def __post_init__(self):
        if self.dim < 1 or self.radius <= 0:
            raise InvalidParameter("l1-ball needs dim >= 1 and radius > 0")

    def contains(self, x, tol=0.0):
        return bool(np.abs(self._check(x)).sum() <= self.radius + tol)

    def project(self, x, tol=1e-10):
        return project_l1_ball(self._check(x), self.radius)

    def linear_minimize(self, c):
        c = self._check(c)
        j = int(np.argmax(np.abs(c)))
        z = np.zeros(self.dim)
        z[j] = -self.radius * np.sign(c[j])
        return z, float(c @ z)

    def bounds(self):
        return np.full(self.dim, -self.radius), np.full(self.dim, self.radius)

    def describe(self):
        return {"kind": "l1ball", "dim": self.dim, "radius": self.radius}


@dataclass(frozen=True, eq=False)
class PolyhedronCapL1(FeasibleSet):
    """{x : A x <= b, ||x||_1 <= radius}."""

    A: np.ndarray
    b: np.ndarray
    radius: float = 1.0
    max_cycles: int = 50_000

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, float))
        b = np.atleast_1d(np.asarray(self.b, float))
        if A.shape[0] != b.size:
            raise DimensionMismatch("A and b have inconsistent row counts")
        if self.radius <= 0:
            raise InvalidParameter("radius must be positive")
        object.__setattr__(self, "A", _readonly(A))
        object.__setattr__(self, "b", _readonly(b))
        object.__setattr__(self, "_row_norm2", _readonly(np.einsum("ij,ij->i", A, A)))
        if np.any(b < 0):
            # Phase I on the split-variable form; raises Infeasible if empty.
            self._lp(np.zeros(self.dim))

    @property
    def dim(self) -> int:
        return self.A.shape[1]

    def _lp(self, c):
        n = self.dim
        A_ub = np.vstack([np.hstack([self.A, -self.A]), np.ones((1, 2 * n))])
        b_ub = np.concatenate([self.b, [self.radius]])
        res = linprog_dense(np.concatenate([c, -c]), A_ub, b_ub)
        return res.x[:n] - res.x[n:]

    def contains(self, x, tol=0.0):
        x = self._check(x)
        return bool(np.all(self.A @ x <= self.b + tol) and np.abs(x).sum() <= self.radius + tol)

    def _project_halfspace(self, y, i):
        viol = self.A[i] @ y - self.b[i]
        if viol <= 0 or self._row_norm2[i] == 0.0:
            return y
        return y - (viol / self._row_norm2[i]) * self.A[i]

    def project(self, x, tol=1e-10):
        x = self._check(x)
        if self.contains(x):
            return x.copy()
        p = project_l1_ball(x, self.radius)
        if np.all(self.A @ p <= self.b):
            return p
        if self.A.shape[0] == 1:
            q = self._project_halfspace(x, 0)
            if np.abs(q).sum() <= self.radius:
                return q
        m = self.A.shape[0]
        y = x.copy()
        incs = np.zeros((m + 1, self.dim))
        for _ in range(self.max_cycles):
            start = y
            for i in range(m):
                z = self._project_halfspace(y + incs[i], i)
                incs[i] = y + incs[i] - z
                y = z
            z = project_l1_ball(y + incs[m], self.radius)
            incs[m] = y + incs[m] - z
            y = z
            if np.linalg.norm(y - start) <= 0.1 * tol and self.contains(y, tol):
                return y
        raise InnerSolverFailure(f"Dykstra projection did not reach tol={tol} in {self.max_cycles} cycles")

    def linear_minimize(self, c):
        c = self._check(c)
        z = self._lp(c)
        return z, float(c @ z)

    def bounds(self):
        return np.full(self.dim, -self.radius), np.full(self.dim, self.radius)

    def interior_point(self):
        if np.all(self.b >= 0):
            return np.zeros(self.dim)
        return self._lp(np.zeros(self.dim))

    def describe(self):
        return {"kind": "polyhedron_cap_l1", "A": self.A.tolist(), "b": self.b.tolist(), "radius": self.radius}


@dataclass(frozen=True, eq=False)
class Product(FeasibleSet):
    """Cartesian product of sets; coordinates are the concatenation of blocks."""

    factors: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if not self.factors:
            raise InvalidParameter("product of zero sets")
        object.__setattr__(self, "factors", tuple(self.factors))
        offsets = np.cumsum([0] + [f.dim for f in self.factors])
        object.__setattr__(self, "_offsets", offsets)

    @property
    def dim(self) -> int:
        return int(self._offsets[-1])

    def blocks(self, x) -> list[np.ndarray]:
        o = self._offsets
        return [x[o[i]:o[i + 1]] for i in range(len(self.factors))]

    def contains(self, x, tol=0.0):
        x = self._check(x)
        return all(f.contains(xi, tol) for f, xi in zip(self.factors, self.blocks(x)))

    def project(self, x, tol=1e-10):
        x = self._check(x)
        return np.concatenate([f.project(xi, tol) for f, xi in zip(self.factors, self.blocks(x))])

    def linear_minimize(self, c):
        c = self._check(c)
        parts = [f.linear_minimize(ci) for f, ci in zip(self.factors, self.blocks(c))]
        z = np.concatenate([p[0] for p in parts])
        return z, float(sum(p[1] for p in parts))

    def bounds(self):
        lo, hi = zip(*(f.bounds() for f in self.factors))
        return np.concatenate(lo), np.concatenate(hi)

    def interior_point(self):
        return np.concatenate([f.interior_point() for f in self.factors])

    def describe(self):
        return {"kind": "product", "factors": [f.describe() for f in self.factors]}


def product_of_boxes(blocks: Sequence[Box]) -> Product:
    return Product(tuple(blocks))
