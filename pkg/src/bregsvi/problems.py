"""Benchmark problems as (oracle, feasible set) pairs.

* :class:`FractionalProblem` -- gradient operator of a stochastic
  fractional program ``E[phi(x, xi)] / psi(x)`` over ``{Ax <= b, ||x||_1 <= 1}``,
  with either a linear or an exponential denominator.
* :class:`NashCournot` -- networked Cournot game with random intercepts
  and random marginal costs over per-firm capacity boxes.
* :class:`AffineProblem` -- ``F(x) = M (x - x*)`` plus bounded zero-mean
  noise on a box, with ``x*`` known exactly.

All frozen instance data is generated from ``instance_seed`` with numpy's
default generator, so a problem is fully described by its constructor
arguments (see ``describe``).
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DimensionMismatch, InvalidParameter, OracleFailure
from .oracle import StochasticOracle, uniform_to_normal
from .sets import Box, FeasibleSet, PolyhedronCapL1, Product


class Problem(StochasticOracle):
    """A stochastic oracle bundled with its feasible set and a start point."""

    feasible_set: FeasibleSet
    x0: np.ndarray

    def reference_solution(self) -> Optional[np.ndarray]:
        return None

    def spec_hash(self) -> str:
        blob = json.dumps(self.describe(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def _check_x(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise DimensionMismatch(f"expected x of length {self.dim}, got {x.shape}")
        return x


# ---------------------------------------------------------------------------
# fractional programs


@dataclass
class _FracBatch:
    S: np.ndarray   # mean of (V + V^T) / (2 ||V||_F)
    w: np.ndarray   # mean of c + cbar
    W2: np.ndarray  # mean of (c + cbar)(c + cbar)^T


class FractionalProblem(Problem):
    """Per-sample operator ``f(x, xi) = grad_x [phi(x, xi) / psi(x)]``.

    ``phi(x, xi) = 0.5 x^T M(xi) x + 0.5 (w(xi)^T x + 4n)^2`` with
    ``M(xi) = 0.025 U U^T + 0.025 ||U U^T||_F V(xi) / ||V(xi)||_F`` and
    ``w(xi) = c + cbar(xi)``.  Only the symmetric part of ``M`` enters the
    gradient.  ``V`` has standard normal entries, ``cbar`` is uniform on
    [0, 1]^n.

    Denominators:

    * ``"linear"``: ``psi(x) = r^T x + t + 4n``;
    * ``"exponential"``: ``psi(x) = 1e4 (exp((8n+2)/2000) - exp((r^T x + t + 4n)/2000))``.

    Instance data: ``U`` standard normal, ``c, cbar`` uniform on [0, 1],
    ``r`` uniform on [0, 5]^n, ``t`` uniform on [0, 5], ``A`` standard
    normal with ``ceil(n/10)`` rows and ``b = |b~| + 1`` (so 0 is strictly
    feasible).
    """

    def __init__(self, n: int = 10, instance_seed: int = 0, denominator: str = "linear", radius: float = 1.0):
        if n < 1:
            raise InvalidParameter("n must be positive")
        if denominator not in ("linear", "exponential"):
            raise InvalidParameter(f"unknown denominator {denominator!r}")
        if denominator == "exponential" and n <= 2:
            raise InvalidParameter("the exponential denominator needs n > 2 to stay positive")
        self.n = self.dim = int(n)
        self.instance_seed = int(instance_seed)
        self.denominator = denominator
        self.radius = float(radius)
        rng = np.random.default_rng(self.instance_seed)
        self.U = rng.standard_normal((n, n))
        self.c = rng.uniform(0.0, 1.0, n)
        self.r = rng.uniform(0.0, 5.0, n)
        self.t = float(rng.uniform(0.0, 5.0))
        m = math.ceil(n / 10)
        self.A = rng.standard_normal((m, n))
        self.b = np.abs(rng.standard_normal(m)) + 1.0
        self.UU = 0.025 * (self.U @ self.U.T)
        self.kappa = 0.025 * float(np.linalg.norm(self.U @ self.U.T, "fro"))
        self._n_normal = 2 * ((n * n + 1) // 2)
        self.words_per_draw = self._n_normal + n
        self.feasible_set = PolyhedronCapL1(self.A, self.b, self.radius)
        self.x0 = np.zeros(n)

    # -- denominator ---------------------------------------------------------
    def psi(self, x) -> float:
        n = self.n
        lin = float(self.r @ x) + self.t + 4 * n
        if self.denominator == "linear":
            return lin
        return 1e4 * (math.exp((8 * n + 2) / 2000.0) - math.exp(lin / 2000.0))

    def grad_psi(self, x) -> np.ndarray:
        if self.denominator == "linear":
            return self.r.copy()
        lin = float(self.r @ x) + self.t + 4 * self.n
        return -5.0 * math.exp(lin / 2000.0) * self.r

    def _psi_checked(self, x):
        p = self.psi(x)
        if not p > 0:
            raise OracleFailure(f"denominator psi(x) = {p} <= 0 (infeasible probe)")
        return p

    # -- sampling ------------------------------------------------------------
    def _decode(self, u):
        N, n = u.shape[0], self.n
        V = uniform_to_normal(u[:, :self._n_normal])[:, :n * n].reshape(N, n, n)
        cbar = u[:, self._n_normal:]
        return V, cbar

    def _quotient(self, x, gphi, phi):
        p = self._psi_checked(x)
        return (gphi * p - np.multiply.outer(phi, self.grad_psi(x))) / (p * p)

    def sample_eval(self, x, u):
        x = self._check_x(x)
        V, cbar = self._decode(u)
        n = self.n
        Vs = 0.5 * (V + V.transpose(0, 2, 1)) / np.linalg.norm(V.reshape(len(V), -1), axis=1)[:, None, None]
        M = self.UU[None] + self.kappa * Vs
        w = self.c[None] + cbar
        Mx = M @ x
        lin = w @ x + 4 * n
        gphi = Mx + lin[:, None] * w
        phi = 0.5 * (Mx @ x) + 0.5 * lin ** 2
        return self._quotient(x, gphi, phi)

    def prepare(self, u):
        V, cbar = self._decode(u)
        N = len(V)
        norms = np.linalg.norm(V.reshape(N, -1), axis=1)
        S = np.einsum("kij,k->ij", V, 1.0 / norms) / N
        w = self.c[None] + cbar
        return _FracBatch(0.5 * (S + S.T), w.mean(axis=0), (w.T @ w) / N)

    def _mean_from_stats(self, x, S, wbar, W2):
        n = self.n
        M = self.UU + self.kappa * S
        Mx, W2x = M @ x, W2 @ x
        gphi = Mx + W2x + 4 * n * wbar
        phi = 0.5 * float(Mx @ x) + 0.5 * (float(W2x @ x) + 8 * n * float(wbar @ x) + 16 * n * n)
        return self._quotient(x, gphi, phi)

    def batch_mean(self, x, batch: _FracBatch):
        return self._mean_from_stats(self._check_x(x), batch.S, batch.w, batch.W2)

    def mean_eval(self, x):
        # E[V/||V||_F] = 0 by sign symmetry; E[cbar] = 1/2, Var[cbar_i] = 1/12
        wbar = self.c + 0.5
        W2 = np.outer(wbar, wbar) + np.eye(self.n) / 12.0
        return self._mean_from_stats(self._check_x(x), np.zeros((self.n, self.n)), wbar, W2)

    def objective(self, x, V, cbar) -> float:
        """``phi(x, xi) / psi(x)`` for one explicit draw (used in derivative checks)."""
        x = np.asarray(x, float)
        M = self.UU + self.kappa * V / np.linalg.norm(V)
        w = self.c + cbar
        return (0.5 * x @ M @ x + 0.5 * (w @ x + 4 * self.n) ** 2) / self.psi(x)

    def describe(self):
        return {"kind": "fractional", "n": self.n, "instance_seed": self.instance_seed,
                "denominator": self.denominator, "radius": self.radius,
                "data": "U~N(0,1); c,cbar~U[0,1]; r,t~U[0,5]; A~N(0,1); b=|N(0,1)|+1"}


# ---------------------------------------------------------------------------
# Nash-Cournot


class NashCournot(Problem):
    """``I`` firms, ``J`` markets; ``x`` is firm-major (block i = firm i's sales).

    Block ``i`` of the per-sample operator is
    ``2 b*x_i + c_i(xi) e + b*(sum_s x_s - x_i) - a(xi)`` with
    ``a(xi) ~ U[a_lo, a_hi]^J`` and ``c(xi) ~ U[c_lo, c_hi]^I``; the slopes ``b``
    are drawn once from ``U[0, 2]^J``.  Each firm's set is the box
    ``[0, cap]^J``.
    """

    def __init__(self, I: int = 10, J: int = 10, instance_seed: int = 0, a_bounds=(30.0, 60.0),
                 c_bounds=(2.0, 6.0), cap: float = 2.0, b: Optional[np.ndarray] = None):
        if I < 1 or J < 1 or cap <= 0:
            raise InvalidParameter("NashCournot needs I, J >= 1 and cap > 0")
        self.I, self.J = int(I), int(J)
        self.dim = self.I * self.J
        self.instance_seed = int(instance_seed)
        self.a_bounds = tuple(float(v) for v in a_bounds)
        self.c_bounds = tuple(float(v) for v in c_bounds)
        self.cap = float(cap)
        if b is None:
            b = np.random.default_rng(self.instance_seed).uniform(0.0, 2.0, self.J)
        self.b = np.asarray(b, dtype=float)
        if self.b.shape != (self.J,) or np.any(self.b < 0):
            raise InvalidParameter("b must be a nonnegative vector of length J")
        self.words_per_draw = self.J + self.I
        self.feasible_set = Product(tuple(Box.uniform(self.J, 0.0, self.cap) for _ in range(self.I)))
        self.x0 = np.zeros(self.dim)
        # F is affine; per-market Jacobian block is b_j (I_I + 1 1^T), eigenvalues b_j and (I+1) b_j
        self.lipschitz = float((self.I + 1) * self.b.max())
        self._xstar: Optional[np.ndarray] = None

    def _operator(self, x, a, c):
        X = x.reshape(self.I, self.J)
        tot = X.sum(axis=0)
        return (self.b * X + c[:, None] + self.b * tot - a[None, :]).ravel()

    def _decode(self, u):
        (alo, ahi), (clo, chi) = self.a_bounds, self.c_bounds
        return alo + (ahi - alo) * u[:, :self.J], clo + (chi - clo) * u[:, self.J:]

    def sample_eval(self, x, u):
        x = self._check_x(x)
        a, c = self._decode(u)
        return np.stack([self._operator(x, a[k], c[k]) for k in range(len(a))])

    def prepare(self, u):
        a, c = self._decode(u)
        return a.mean(axis=0), c.mean(axis=0)

    def batch_mean(self, x, batch):
        return self._operator(self._check_x(x), *batch)

    def mean_eval(self, x):
        a = np.full(self.J, 0.5 * sum(self.a_bounds))
        c = np.full(self.I, 0.5 * sum(self.c_bounds))
        return self._operator(self._check_x(x), a, c)

    def reference_solution(self, tol: float = 1e-10, max_iter: int = 100_000) -> np.ndarray:
        """High-accuracy solution of the mean problem (deterministic extragradient)."""
        if self._xstar is None:
            from .solvers import deterministic_extragradient
            from .bregman import Euclidean

            res = deterministic_extragradient(self, self.feasible_set, Euclidean(1.0), self.x0,
                                              gamma=0.5 / self.lipschitz, max_iter=max_iter, tol=tol)
            self._xstar = res.x
        return self._xstar.copy()

    def describe(self):
        return {"kind": "nash", "I": self.I, "J": self.J, "instance_seed": self.instance_seed,
                "a_bounds": list(self.a_bounds), "c_bounds": list(self.c_bounds), "cap": self.cap,
                "b": self.b.tolist()}


# ---------------------------------------------------------------------------
# affine test problem


class AffineProblem(Problem):
    """``f(x, xi) = M (x - x*) + noise * B (2 u(xi) - 1)`` on ``[-1, 1]^n``.

    ``M = Q diag(lam) Q^T + skew * (S - S^T)`` with ``lam`` log-spaced in
    ``[1/condition, 1]`` (so ``M`` is positive definite with symmetric part of
    the chosen condition number); ``Q`` is a random orthogonal matrix.  The
    noise is bounded and zero mean, with a low-rank loading ``B`` (``rank``
    uniforms per draw).  ``x*`` is drawn from ``[-0.5, 0.5]^n`` so it is
    interior; ``F(x*) = 0``.
    """

    def __init__(self, n: int = 20, condition: float = 100.0, noise: float = 0.1, rank: int = 4,
                 skew: float = 0.0, instance_seed: int = 0, x0: Optional[np.ndarray] = None):
        if n < 1 or condition < 1 or noise < 0 or rank < 1 or skew < 0:
            raise InvalidParameter("AffineProblem: n >= 1, condition >= 1, noise >= 0, rank >= 1, skew >= 0")
        self.n = self.dim = int(n)
        self.condition, self.noise, self.rank, self.skew = float(condition), float(noise), int(rank), float(skew)
        self.instance_seed = int(instance_seed)
        rng = np.random.default_rng(self.instance_seed)
        Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
        lam = np.logspace(-math.log10(self.condition), 0.0, n)
        S = rng.standard_normal((n, n)) / math.sqrt(n)
        self.M = (Q * lam) @ Q.T + self.skew * (S - S.T)
        self.B = rng.standard_normal((n, self.rank)) / math.sqrt(self.rank)
        self.x_star = rng.uniform(-0.5, 0.5, n)
        self.words_per_draw = self.rank
        self.lipschitz = float(np.linalg.norm(self.M, 2))
        self.feasible_set = Box.uniform(n, -1.0, 1.0)
        self.x0 = np.full(n, 0.9) if x0 is None else np.asarray(x0, dtype=float)

    def sample_eval(self, x, u):
        x = self._check_x(x)
        return (self.M @ (x - self.x_star))[None, :] + self.noise * (2.0 * u - 1.0) @ self.B.T

    def prepare(self, u):
        return self.noise * (self.B @ (2.0 * u.mean(axis=0) - 1.0))

    def batch_mean(self, x, batch):
        return self.M @ (self._check_x(x) - self.x_star) + batch

    def mean_eval(self, x):
        return self.M @ (self._check_x(x) - self.x_star)

    def reference_solution(self):
        return self.x_star.copy()

    @property
    def noise_bound(self) -> float:
        """Almost-sure bound on ``||f(x, xi) - F(x)||``."""
        return self.noise * float(np.abs(self.B).sum(axis=1) @ np.abs(self.B).sum(axis=1)) ** 0.5

    def describe(self):
        return {"kind": "affine", "n": self.n, "condition": self.condition, "noise": self.noise,
                "rank": self.rank, "skew": self.skew, "instance_seed": self.instance_seed}


def affine_test_problem(n: int, condition: float, seed: int, **kw):
    p = AffineProblem(n=n, condition=condition, instance_seed=seed, **kw)
    return p, p.feasible_set, p.reference_solution()
