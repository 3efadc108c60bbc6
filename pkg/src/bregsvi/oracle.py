"""Stochastic operators, reproducible sample streams and batch schedules.

Draws come from a counter-based generator (Philox): draw number ``c`` of
a stream with seed ``s`` is a pure function of ``(s, c)``.  A stream is an
immutable value; drawing returns the advanced stream.  This makes the
"redraw a batch" path, parallel sample paths and bitwise reproducibility
all free.

Every oracle declares how many 64-bit words one sample needs
(``words_per_draw``); a batch of ``N`` samples is handed to the oracle as an
``(N, words_per_draw)`` array of open-interval uniforms, which the oracle
decodes itself (e.g. Box-Muller for normals).
"""
from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, replace
from typing import Any, Callable, Optional

import numpy as np

from .errors import DimensionMismatch, InvalidParameter, OracleFailure

_TWO_M52 = 2.0 ** -52
_WORDS_PER_BLOCK = 4  # Philox4x64 emits four words per counter increment

# Key purposes: disjoint key spaces for the solver's samples and for
# samples drawn only to evaluate metrics.
PURPOSE_ALGORITHM = 0
PURPOSE_METRIC = 1


def _blocks(words: int) -> int:
    return max(1, -(-words // _WORDS_PER_BLOCK))


def raw_to_uniform(raw: np.ndarray) -> np.ndarray:
    """Map 64-bit words to doubles in the open interval (0, 1).

    Uses the top 52 bits so that ``m + 0.5`` is exact: the extreme values
    are ``2**-53`` and ``1 - 2**-53`` (with 53 bits the top one would round
    to exactly 1.0).
    """
    return ((raw >> np.uint64(12)).astype(np.float64) + 0.5) * _TWO_M52


def uniform_to_normal(u: np.ndarray) -> np.ndarray:
    """Box-Muller on consecutive column pairs; the last axis must be even."""
    u1, u2 = u[..., 0::2], u[..., 1::2]
    rad = np.sqrt(-2.0 * np.log(u1))
    ang = 2.0 * np.pi * u2
    out = np.empty(u.shape, dtype=float)
    out[..., 0::2] = rad * np.cos(ang)
    out[..., 1::2] = rad * np.sin(ang)
    return out


@dataclass(frozen=True)
class SampleStream:
    """Position in a reproducible sequence of i.i.d. draws.

    ``counter`` counts draws (not words); ``calls`` counts oracle calls,
    i.e. per-sample operator evaluations charged to this stream.
    """

    seed: int
    counter: int = 0
    calls: int = 0
    purpose: int = PURPOSE_ALGORITHM

    def __post_init__(self):
        if not 0 <= self.seed < 2 ** 64:
            raise InvalidParameter("seed must be an unsigned 64-bit integer")
        if self.counter < 0 or self.calls < 0:
            raise InvalidParameter("counter and calls must be nonnegative")

    @property
    def key(self) -> int:
        return (self.purpose << 64) | self.seed

    def uniforms(self, N: int, words_per_draw: int) -> tuple[np.ndarray, "SampleStream"]:
        """Return ``(N, words_per_draw)`` uniforms and the stream advanced by N draws.

        Does not touch ``calls``; accounting is done by the caller that
        actually evaluates the operator on the draws.
        """
        if N < 1:
            raise InvalidParameter("batch size must be >= 1")
        nxt = replace(self, counter=self.counter + N)
        if words_per_draw == 0:
            return np.empty((N, 0)), nxt
        bpd = _blocks(words_per_draw)
        width = bpd * _WORDS_PER_BLOCK
        # Philox emits the block *after* the stored counter, consistently,
        # so draw c occupies blocks c*bpd+1 .. (c+1)*bpd.
        gen = np.random.Philox(key=self.key, counter=self.counter * bpd)
        raw = gen.random_raw(N * width).reshape(N, width)
        return raw_to_uniform(raw[:, :words_per_draw]), nxt

    def charged(self, n_calls: int) -> "SampleStream":
        return replace(self, calls=self.calls + n_calls)


class StochasticOracle(ABC):
    """Sampled operator ``f(x, xi)`` over R^dim.

    Subclasses implement :meth:`sample_eval`.  For speed they may also
    override :meth:`prepare` / :meth:`batch_mean` to reduce a batch to
    sufficient statistics once and then evaluate the batch mean at many
    points (the line search evaluates one batch at several trial points).
    """

    dim: int
    words_per_draw: int = 0
    lipschitz: Optional[float] = None

    @abstractmethod
    def sample_eval(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        """Per-sample values ``f(x, xi_j)`` as an ``(N, dim)`` array."""

    def mean_eval(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError(f"{type(self).__name__} has no closed-form mean")

    @property
    def has_mean(self) -> bool:
        return type(self).mean_eval is not StochasticOracle.mean_eval

    def prepare(self, u: np.ndarray) -> Any:
        return u

    def batch_mean(self, x: np.ndarray, batch: Any) -> np.ndarray:
        return self.sample_eval(x, batch).mean(axis=0)

    def describe(self) -> dict:
        return {"kind": type(self).__name__}


@dataclass(frozen=True)
class Batch:
    """A drawn batch: the oracle's prepared statistics plus draw bookkeeping."""

    data: Any
    size: int
    first: int  # counter of the first draw
    seed: int

    @property
    def draw_range(self) -> tuple[int, int]:
        return self.first, self.first + self.size


def draw_batch(oracle: StochasticOracle, stream: SampleStream, N: int) -> tuple[Batch, SampleStream]:
    """Draw ``N`` fresh samples and charge ``N`` oracle calls to the stream."""
    u, nxt = stream.uniforms(int(N), oracle.words_per_draw)
    batch = Batch(oracle.prepare(u), int(N), stream.counter, stream.seed)
    return batch, nxt.charged(int(N))


def evaluate(oracle: StochasticOracle, x: np.ndarray, batch: Batch) -> np.ndarray:
    """Batch mean at ``x``; raises :class:`OracleFailure` on non-finite output."""
    val = np.asarray(oracle.batch_mean(x, batch.data), dtype=float)
    if val.shape != (oracle.dim,):
        raise DimensionMismatch(f"oracle returned shape {val.shape}, expected ({oracle.dim},)")
    if not np.all(np.isfinite(val)):
        lo, hi = batch.draw_range
        raise OracleFailure(f"non-finite operator value (seed {batch.seed}, draws [{lo}, {hi}))")
    return val


def empirical_mean(oracle: StochasticOracle, x, stream: SampleStream, N: int) -> tuple[np.ndarray, SampleStream]:
    """``(1/N) sum_j f(x, xi_j)`` over ``N`` fresh draws, and the advanced stream."""
    x = np.asarray(x, dtype=float)
    if x.shape != (oracle.dim,):
        raise DimensionMismatch(f"expected x of length {oracle.dim}")
    batch, stream = draw_batch(oracle, stream, N)
    return evaluate(oracle, x, batch), stream


class DeterministicOracle(StochasticOracle):
    """Wrap an exact map ``F`` as a (noise-free) stochastic oracle."""

    words_per_draw = 0

    def __init__(self, F: Callable[[np.ndarray], np.ndarray], dim: int, lipschitz: Optional[float] = None):
        self.F = F
        self.dim = int(dim)
        self.lipschitz = lipschitz

    def sample_eval(self, x, u):
        return np.tile(self.F(np.asarray(x, float)), (u.shape[0], 1))

    def batch_mean(self, x, batch):
        return np.asarray(self.F(np.asarray(x, float)), dtype=float)

    def mean_eval(self, x):
        return np.asarray(self.F(np.asarray(x, float)), dtype=float)


# ---------------------------------------------------------------------------
# batch-size schedules


def _ceil(v: float) -> int:
    """Ceiling that is not fooled by ``32 ** 0.8 == 16.000000000000004``."""
    r = round(v)
    if abs(v - r) <= 1e-9 * max(1.0, abs(v)):
        return int(r)
    return int(math.ceil(v))


class Schedule(ABC):
    @abstractmethod
    def __call__(self, k: int) -> int: ...

    @abstractmethod
    def describe(self) -> dict: ...

    def total(self, K: int) -> int:
        return sum(self(k) for k in range(K))


@dataclass(frozen=True)
class Constant(Schedule):
    N: int = 1

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise InvalidParameter("constant batch size must be a positive integer")

    def __call__(self, k):
        return int(self.N)

    def describe(self):
        return {"kind": "constant", "N": self.N}


@dataclass(frozen=True)
class Power(Schedule):
    """``mult * ceil((k+1)**power / divisor)``."""

    power: float
    mult: int = 1
    divisor: float = 1.0

    def __post_init__(self):
        if self.power < 0 or self.divisor <= 0 or self.mult < 1 or int(self.mult) != self.mult:
            raise InvalidParameter("power schedule needs power >= 0, divisor > 0, integer mult >= 1")

    def __call__(self, k):
        if k < 0:
            raise InvalidParameter("iteration index must be nonnegative")
        return int(self.mult) * max(1, _ceil((k + 1) ** self.power / self.divisor))

    def describe(self):
        return {"kind": "power", "power": self.power, "mult": self.mult, "divisor": self.divisor}


def Power32(d: float = 1.0) -> Power:
    """``ceil((k+1)**1.5 / d)``: summable reciprocals."""
    return Power(1.5, 1, d)


def Power08() -> Power:
    """``ceil((k+1)**0.8)``."""
    return Power(0.8)


def NashSchedule() -> Power:
    """``2 * ceil((k+1)**0.8)``."""
    return Power(0.8, mult=2)


@dataclass(frozen=True)
class LogPower(Schedule):
    """``N * max(1, ceil(scale * (k+lam) * ln(k+lam)**(1+b)))``.

    ``scale`` < 1 gives the small-prefactor variant used for the fractional
    benchmarks (``scale=0.1``); the floor of one keeps early batches nonempty.
    """

    N: int = 1
    lam: float = 2.05
    b: float = 1e-4
    scale: float = 1.0

    def __post_init__(self):
        if self.lam <= 2 or self.b <= 0 or self.scale <= 0:
            raise InvalidParameter("log-power schedule needs lam > 2, b > 0, scale > 0")
        if int(self.N) != self.N or self.N < 1:
            raise InvalidParameter("N must be a positive integer")

    def __call__(self, k):
        if k < 0:
            raise InvalidParameter("iteration index must be nonnegative")
        t = k + self.lam
        return int(self.N) * max(1, _ceil(self.scale * t * math.log(t) ** (1.0 + self.b)))

    def describe(self):
        return {"kind": "logpower", "N": self.N, "lam": self.lam, "b": self.b, "scale": self.scale}
