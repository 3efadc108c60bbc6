"""Distance-generating functions, Bregman distances and prox-mappings.

The Bregman distance of a strongly convex ``s`` is

    V(x, z) = s(z) - s(x) - grad s(x)^T (z - x)

and the prox-mapping is ``P(x, r) = argmin_{z in X} r^T z + V(x, z)``.

Every generator carries an explicit ``scale`` so that the declared
strong-convexity modulus ``alpha`` is literally true on the working set:
``Euclidean(alpha)`` is ``(alpha/2)||x||^2`` rather than ``0.5||x||^2``.

Closed forms are used whenever the pair (generator, set) allows it:

* Euclidean generator: Euclidean projection of ``x - r/alpha``;
* separable generator on a box: clip of the unconstrained minimizer;
* separable generator on a simplex or l1-ball: one-dimensional root
  finding on the multiplier of the single coupling constraint;
* products of the above: blockwise.

Anything else goes to an accelerated projected-gradient inner solver.
"""
from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import brentq
from scipy.special import logsumexp, xlogy

from .errors import DomainViolation, InnerSolverFailure, InvalidParameter
from .sets import Box, FeasibleSet, L1Ball, Product, Simplex

DEFAULT_PROX_TOL = 1e-8


@dataclass(frozen=True)
class BregmanEvaluation:
    value: float
    grad_gap: np.ndarray  # grad s(z) - grad s(x)


class DistanceGenerator(ABC):
    """Strongly convex ``s`` with modulus ``alpha`` (and optional gradient
    Lipschitz constant ``lipschitz_grad``)."""

    alpha: float
    lipschitz_grad: Optional[float] = None
    separable: bool = False

    def _validate_moduli(self):
        if not self.alpha > 0:
            raise InvalidParameter("alpha must be positive")
        if self.lipschitz_grad is not None and self.lipschitz_grad < self.alpha * (1 - 1e-12):
            raise InvalidParameter("lipschitz_grad must be >= alpha")

    @abstractmethod
    def in_domain(self, x: np.ndarray) -> bool: ...

    def check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if not self.in_domain(x):
            raise DomainViolation(f"point outside the domain of {type(self).__name__}")
        return x

    @abstractmethod
    def value(self, x) -> float: ...

    @abstractmethod
    def grad(self, x) -> np.ndarray: ...

    def divergence(self, x, z) -> float:
        """V(x, z); subclasses override with cancellation-free forms."""
        x, z = self.check(x), self.check(z)
        return max(0.0, self.value(z) - self.value(x) - float(self.grad(x) @ (z - x)))

    def distance(self, x, z) -> BregmanEvaluation:
        return BregmanEvaluation(self.divergence(x, z), self.grad(z) - self.grad(x))

    # separable generators: s(x) = sum_i h(x_i); grad_inverse maps a dual
    # value y to the unique z with h'(z) = y, or to the domain edge.
    def grad_inverse(self, y) -> np.ndarray:
        raise NotImplementedError

    def edge_slope(self) -> float:
        """h'(z) at the lower edge of the working region (0 for the simplex)."""
        raise NotImplementedError

    @abstractmethod
    def describe(self) -> dict: ...


class Euclidean(DistanceGenerator):
    """``s(x) = (alpha/2)||x||^2``; V is ``(alpha/2)||x - z||^2`` and Q = alpha."""

    separable = True

    def __init__(self, alpha: float = 1.0):
        self.alpha = float(alpha)
        self.lipschitz_grad = self.alpha
        self._validate_moduli()

    def in_domain(self, x):
        return bool(np.all(np.isfinite(x)))

    def value(self, x):
        x = self.check(x)
        return 0.5 * self.alpha * float(x @ x)

    def grad(self, x):
        return self.alpha * self.check(x)

    def divergence(self, x, z):
        d = self.check(z) - self.check(x)
        return 0.5 * self.alpha * float(d @ d)

    def grad_inverse(self, y):
        return np.asarray(y, dtype=float) / self.alpha

    def edge_slope(self):
        return 0.0

    def describe(self):
        return {"kind": "euclidean", "alpha": self.alpha}


class ShiftedEntropy(DistanceGenerator):
    """``s(x) = scale * sum (x_i + sigma) log(x_i + sigma)``.

    The Hessian is ``scale / (x_i + sigma)``, so on ``x_i <= upper`` the
    modulus is ``scale / (upper + sigma)`` and on ``x_i >= lower`` the
    gradient is ``scale / (lower + sigma)``-Lipschitz.  ``sigma = 0`` is
    allowed (plain entropy, interior of the orthant only).
    """

    separable = True

    def __init__(self, sigma: float = 1e-2, scale: float = 1.0, upper: float = 1.0, lower: float = 0.0):
        if sigma < 0 or scale <= 0:
            raise InvalidParameter("ShiftedEntropy needs sigma >= 0 and scale > 0")
        if upper + sigma <= 0 or lower > upper:
            raise InvalidParameter("working region must satisfy -sigma < upper and lower <= upper")
        self.sigma, self.scale = float(sigma), float(scale)
        self.upper, self.lower = float(upper), float(lower)
        self.alpha = self.scale / (self.upper + self.sigma)
        self.lipschitz_grad = self.scale / (self.lower + self.sigma) if self.lower + self.sigma > 0 else None
        self._validate_moduli()

    @classmethod
    def with_modulus(cls, alpha: float, sigma: float = 1e-2, upper: float = 1.0, lower: float = 0.0):
        """Choose ``scale`` so that the modulus on ``x <= upper`` equals ``alpha``."""
        return cls(sigma=sigma, scale=alpha * (upper + sigma), upper=upper, lower=lower)

    def in_domain(self, x):
        return bool(np.all(np.asarray(x) + self.sigma > 0))

    def value(self, x):
        x = self.check(x)
        return self.scale * float(np.sum(xlogy(x + self.sigma, x + self.sigma)))

    def grad(self, x):
        x = self.check(x)
        return self.scale * (np.log(x + self.sigma) + 1.0)

    def divergence(self, x, z):
        x = self.check(x)
        z = np.asarray(z, dtype=float)
        if np.any(z + self.sigma < 0):
            raise DomainViolation("point outside the domain of ShiftedEntropy")
        zs, xs = z + self.sigma, x + self.sigma
        terms = xlogy(zs, zs) - xlogy(zs, xs) - (z - x)
        return max(0.0, self.scale * float(np.sum(terms)))

    def grad_inverse(self, y):
        return np.exp(np.asarray(y, dtype=float) / self.scale - 1.0) - self.sigma

    def edge_slope(self):
        return self.scale * (math.log(self.sigma) + 1.0) if self.sigma > 0 else -math.inf

    def describe(self):
        return {"kind": "entropy", "sigma": self.sigma, "scale": self.scale, "upper": self.upper, "lower": self.lower}


class PNorm(DistanceGenerator):
    """``s(x) = scale * ln(n) * sum x_i^p`` with ``p = 1 + 1/ln(n)``.

    By default the domain is the nonnegative orthant.  With
    ``symmetric=True`` the generator is extended to all of R^n through
    ``|x_i|^p`` (still convex and separable), which is what sets containing
    negative points need.  Since ``p < 2`` the Hessian
    ``scale * p * |x_i|^(p-2)`` is smallest at the edge of the working
    region ``|x_i| <= bound``, giving ``alpha = scale * p * bound^(p-2)``.
    """

    separable = True

    def __init__(self, n: int, scale: float = 1.0, bound: float = 1.0, symmetric: bool = False):
        if n < 2:
            raise InvalidParameter("PNorm needs n >= 2 (the exponent uses 1/ln n)")
        if scale <= 0 or bound <= 0:
            raise InvalidParameter("scale and bound must be positive")
        self.n, self.scale, self.bound, self.symmetric = int(n), float(scale), float(bound), bool(symmetric)
        self.p = 1.0 + 1.0 / math.log(self.n)
        self._c = self.scale * math.log(self.n)
        self.alpha = self.scale * self.p * self.bound ** (self.p - 2.0)
        self.lipschitz_grad = None
        self._validate_moduli()

    @classmethod
    def with_modulus(cls, alpha: float, n: int, bound: float = 1.0, symmetric: bool = False):
        p = 1.0 + 1.0 / math.log(n)
        return cls(n, scale=alpha / (p * bound ** (p - 2.0)), bound=bound, symmetric=symmetric)

    def in_domain(self, x):
        x = np.asarray(x)
        return bool(np.all(np.isfinite(x)) and (self.symmetric or np.all(x >= 0)))

    def value(self, x):
        x = self.check(x)
        return self._c * float(np.sum(np.abs(x) ** self.p))

    def grad(self, x):
        x = self.check(x)
        return self._c * self.p * np.sign(x) * np.abs(x) ** (self.p - 1.0)

    def divergence(self, x, z):
        x, z = self.check(x), self.check(z)
        ax, az = np.abs(x), np.abs(z)
        terms = az ** self.p - ax ** self.p - self.p * np.sign(x) * ax ** (self.p - 1.0) * (z - x)
        return max(0.0, self._c * float(np.sum(terms)))

    def grad_inverse(self, y):
        y = np.asarray(y, dtype=float)
        mag = (np.abs(y) / (self._c * self.p)) ** (1.0 / (self.p - 1.0))
        if self.symmetric:
            return np.sign(y) * mag
        # minimizer of h(z) - y z over z >= 0 sits at the edge when y <= 0
        return np.where(y > 0, mag, 0.0)

    def edge_slope(self):
        return 0.0

    def describe(self):
        return {"kind": "pnorm", "n": self.n, "scale": self.scale, "bound": self.bound, "symmetric": self.symmetric}


def s_value(gen: DistanceGenerator, x) -> float:
    return gen.value(x)


def bregman_distance(gen: DistanceGenerator, x, z) -> BregmanEvaluation:
    return gen.distance(x, z)


# ---------------------------------------------------------------------------
# prox-mapping


def _root(fun, lo: float, hi: float) -> float:
    """Root of a decreasing function on [lo, hi], widening the bracket if needed."""
    flo, fhi = fun(lo), fun(hi)
    width = max(1.0, hi - lo)
    for _ in range(200):
        if flo >= 0:
            break
        lo -= width
        width *= 2
        flo = fun(lo)
    width = max(1.0, hi - lo)
    for _ in range(200):
        if fhi <= 0:
            break
        hi += width
        width *= 2
        fhi = fun(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    return brentq(fun, lo, hi, xtol=1e-15 * max(1.0, abs(lo), abs(hi)), rtol=1e-15, maxiter=500)


def _prox_separable_box(gen, box: Box, w):
    return np.clip(gen.grad_inverse(w), box.lower, box.upper)


def _prox_separable_simplex(gen, simplex: Simplex, w):
    R = simplex.radius
    if isinstance(gen, ShiftedEntropy) and gen.sigma == 0.0:
        return R * np.exp(w / gen.scale - logsumexp(w / gen.scale))
    edge = gen.edge_slope()

    def z_of(mu):
        return np.maximum(gen.grad_inverse(w - mu), 0.0)

    def excess(mu):
        return float(z_of(mu).sum()) - R

    # at mu_hi every coordinate sits at the edge (sum 0 <= R);
    # at mu_lo every coordinate is at least R/n (sum >= R)
    mu_hi = float(np.max(w)) - edge
    mu_lo = float(np.min(w)) - float(gen.grad(np.full(1, R / simplex.dim))[0])
    mu = _root(excess, mu_lo, mu_hi)
    z = z_of(mu)
    s = z.sum()
    return z * (R / s) if s > 0 else np.full(simplex.dim, R / simplex.dim)


def _prox_separable_l1(gen, ball: L1Ball, w):
    R = ball.radius
    edge = float(gen.grad(np.zeros(1))[0])  # h'(0)

    def z_of(mu):
        up = w - mu > edge
        dn = w + mu < edge
        z = np.zeros_like(w)
        z[up] = gen.grad_inverse(w[up] - mu)
        z[dn] = gen.grad_inverse(w[dn] + mu)
        return z

    z0 = z_of(0.0)
    if np.abs(z0).sum() <= R:
        return z0
    mu = _root(lambda m: float(np.abs(z_of(m)).sum()) - R, 0.0, float(np.max(np.abs(w - edge))))
    z = z_of(mu)
    s = np.abs(z).sum()
    return z * (R / s) if s > R else z


def _closed_form(gen: DistanceGenerator, set_: FeasibleSet, x, r):
    """Return the prox in closed form, or ``None`` if the pair has none."""
    if isinstance(gen, Euclidean):
        return set_.project(x - r / gen.alpha)
    if isinstance(set_, Product):
        parts = [_closed_form(gen, f, xi, ri) for f, xi, ri in zip(set_.factors, set_.blocks(x), set_.blocks(r))]
        if any(p is None for p in parts):
            return None
        return np.concatenate(parts)
    if not gen.separable:
        return None
    w = gen.grad(x) - r
    if isinstance(set_, Box):
        return _prox_separable_box(gen, set_, w)
    if isinstance(set_, Simplex):
        return _prox_separable_simplex(gen, set_, w)
    if isinstance(set_, L1Ball):
        return _prox_separable_l1(gen, set_, w)
    return None


def has_closed_form(gen: DistanceGenerator, set_: FeasibleSet) -> bool:
    if isinstance(gen, Euclidean):
        return True
    if isinstance(set_, Product):
        return all(has_closed_form(gen, f) for f in set_.factors)
    return gen.separable and isinstance(set_, (Box, Simplex, L1Ball))


def prox_generic(gen: DistanceGenerator, set_: FeasibleSet, x, r, tol: float = DEFAULT_PROX_TOL,
                 max_iter: int = 10_000) -> np.ndarray:
    """Accelerated projected gradient on ``phi(z) = r^T z + V(x, z)``.

    The step is backtracked on a gradient-only sufficient-decrease test
    (``(grad phi(c) - grad phi(y))^T d <= ||d||^2 / (2 t)``, which implies the
    descent lemma for convex ``phi`` and, unlike function values, does not
    suffer from cancellation near the optimum).  Momentum restarts on the
    gradient criterion.  Stops when the gradient-mapping norm
    ``||y - Proj(y - t grad phi(y))|| / t`` drops to ``tol``.
    """
    gx = gen.grad(x)

    def dphi(z):
        return r + gen.grad(z) - gx

    z = set_.project(x, tol=0.1 * tol)
    y = z.copy()
    t_acc = 1.0
    step = 1.0 / (gen.lipschitz_grad or gen.alpha)
    for _ in range(max_iter):
        gy = dphi(y)
        while True:
            cand = set_.project(y - step * gy, tol=0.1 * tol)
            d = cand - y
            if gen.in_domain(cand) and float((dphi(cand) - gy) @ d) <= float(d @ d) / (2 * step):
                break
            step *= 0.5
            if step < 1e-300:
                raise InnerSolverFailure("prox inner solver: backtracking underflow")
        if np.linalg.norm(d) / step <= tol:
            return cand
        if float((y - cand) @ (cand - z)) > 0:  # momentum points uphill: restart
            t_acc = 1.0
        t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t_acc * t_acc))
        y = cand + ((t_acc - 1.0) / t_next) * (cand - z)
        if not gen.in_domain(y):
            y = cand.copy()
        z, t_acc = cand, t_next
        step *= 1.25
    raise InnerSolverFailure(f"prox inner solver did not reach tol={tol} in {max_iter} iterations")


def prox_map(gen: DistanceGenerator, set_: FeasibleSet, x, r, tol: float = DEFAULT_PROX_TOL) -> np.ndarray:
    """``argmin_{z in set} r^T z + V(x, z)``."""
    if tol <= 0:
        raise InvalidParameter("tol must be positive")
    x = gen.check(x)
    r = np.asarray(r, dtype=float)
    if r.shape != x.shape:
        raise DomainViolation("r and x differ in shape")
    if not np.any(r):
        return x.copy()
    z = _closed_form(gen, set_, x, r)
    if z is None:
        z = prox_generic(gen, set_, x, r, tol)
    return z


def three_point_identity_check(gen: DistanceGenerator, set_: FeasibleSet, x, r, u,
                               tol: float = DEFAULT_PROX_TOL) -> float:
    """``|(grad s(x+) - grad s(x))^T (x+ - u) - [V(x+,u) + V(x,x+) - V(x,u)]|``."""
    xp = prox_map(gen, set_, x, r, tol)
    u = np.asarray(u, dtype=float)
    lhs = float((gen.grad(xp) - gen.grad(x)) @ (xp - u))
    rhs = gen.divergence(xp, u) + gen.divergence(x, xp) - gen.divergence(x, u)
    return abs(lhs - rhs)
