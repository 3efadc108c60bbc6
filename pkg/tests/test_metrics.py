import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bregsvi.bregman import Euclidean, ShiftedEntropy
from bregsvi.errors import DegenerateFit, InvalidParameter, Unbounded
from bregsvi.metrics import (CSV_COLUMNS, IterationRecord, fit_rate, fit_running_min, gap_function, mean_trace,
                             natural_residual, relative_error, running_min, vrf)
from bregsvi.problems import AffineProblem
from bregsvi.sets import Box, L1Ball, Simplex


def test_natural_residual_examples():
    box = Box.uniform(1, 0.0, 2.0)
    assert natural_residual(np.array([1.0]), np.array([10.0]), 1.0, Euclidean(1.0), box) == pytest.approx(1.0)
    inner = Box.uniform(3, -1, 1)
    assert natural_residual(np.zeros(3), np.zeros(3), 5.0, Euclidean(2.0), inner) == 0.0
    p = AffineProblem(n=6, instance_seed=3)
    for a in (0.1, 1.0, 10.0):
        assert natural_residual(p.x_star, p.mean_eval(p.x_star), a, Euclidean(2.0), p.feasible_set) == 0.0


def test_natural_residual_rejects_nonpositive_a():
    with pytest.raises(InvalidParameter):
        natural_residual(np.zeros(2), np.ones(2), 0.0, Euclidean(1.0), Box.uniform(2, 0, 1))


def test_vrf_uses_gamma0_over_theta():
    box = Box.uniform(2, -1, 1)
    x, F = np.zeros(2), np.array([0.003, -0.001])
    assert vrf(x, F, 0.99, 0.01, Euclidean(1.0), box) == pytest.approx(np.linalg.norm(99 * F))


def test_natural_residual_nondecreasing_in_a(rng):
    box = Box.uniform(4, -1, 1)
    ball = L1Ball(4, 1.0)
    for set_ in (box, ball):
        for _ in range(500):
            x = set_.project(rng.normal(size=4))
            H = rng.normal(size=4)
            a, b = sorted(rng.uniform(0.01, 10, 2))
            assert natural_residual(x, H, a, Euclidean(1.0), set_) <= natural_residual(x, H, b, Euclidean(1.0), set_) + 1e-12


def test_gap_examples():
    box = Box.uniform(2, 0.0, 2.0)
    x, F = np.array([1.0, 1.0]), np.array([1.0, -1.0])
    # vertex enumeration of sup_z F^T (x - z)
    verts = [np.array(v) for v in [(0, 0), (0, 2), (2, 0), (2, 2)]]
    assert gap_function(x, F, box) == pytest.approx(max(F @ (x - v) for v in verts)) == pytest.approx(2.0)
    assert gap_function(x, np.zeros(2), box) == 0.0
    p = AffineProblem(n=5, instance_seed=1)
    assert gap_function(p.x_star, p.mean_eval(p.x_star), p.feasible_set) == 0.0


def test_gap_nonnegative_on_feasible_points(rng):
    for set_ in (Box.uniform(3, -1, 2), Simplex(3), L1Ball(3, 2.0)):
        for _ in range(300):
            x = set_.project(rng.normal(size=3) * 2)
            assert gap_function(x, rng.normal(size=3), set_) >= 0.0


def test_gap_needs_bounded_set():
    half_strip = Box(np.zeros(2), np.array([1.0, np.inf]))
    assert not half_strip.bounded
    with pytest.raises(Unbounded):
        gap_function(np.ones(2), np.ones(2), half_strip)


def test_relative_error_and_running_min():
    assert relative_error(np.array([1.0, 1.0]), np.array([1.0, 0.0])) == pytest.approx(1.0)
    assert relative_error(np.array([1.0]), np.array([0.0])) == 1.0
    assert np.array_equal(running_min([3, 1, 2, 0.5]), [3, 1, 1, 0.5])


def test_fit_rate_examples():
    ks = np.arange(0, 1000)
    f = fit_rate(zip(ks, 1.0 / (ks + 1)))
    assert f.slope == pytest.approx(-1.0, abs=1e-9) and f.r2 == pytest.approx(1.0)
    f = fit_rate(zip(ks, np.full(ks.size, 3.0)))
    assert f.slope == pytest.approx(0.0, abs=1e-12)


@given(st.floats(-3, 1), st.floats(0.01, 100))
def test_fit_rate_recovers_planted_slopes(slope, scale):
    ks = np.arange(0, 500)
    f = fit_rate(zip(ks, scale * (ks + 1.0) ** slope))
    assert f.slope == pytest.approx(slope, abs=1e-6)
    assert math.exp(f.intercept) == pytest.approx(scale, rel=1e-6)


def test_fit_rate_degenerate_inputs():
    with pytest.raises(DegenerateFit):
        fit_rate([(k, 1.0) for k in range(5)])  # too few points
    with pytest.raises(DegenerateFit):
        fit_rate([(k, 1.0) for k in range(20, 60)])  # under two decades
    with pytest.raises(DegenerateFit):
        fit_rate([(k, 0.0) for k in range(200)])  # nonpositive values
    # the decade requirement is a parameter
    assert fit_rate([(k, 1.0 / k) for k in range(50, 2001)], min_decades=1.5).slope < 0


def test_fit_running_min_window():
    ks = np.arange(0, 3000)
    vals = 1.0 / (ks + 1.0) * (1 + 0.5 * np.sin(ks))  # non-monotone
    f = fit_running_min(ks, vals, 10, 2999)
    assert -1.1 < f.slope < -0.9


def _rec(k, **kw):
    base = dict(k=k, gamma_k=0.5, l_k=1, N_k=2, oracle_calls_cum=4 * (k + 1), vrf=1.0, nat_residual=1.0)
    base.update(kw)
    return IterationRecord(**base)


def test_mean_trace_handles_optional_columns_and_ragged_paths():
    a = [_rec(0, vrf=1.0, gap=2.0), _rec(1, vrf=0.5, gap=1.0)]
    b = [_rec(0, vrf=3.0)]
    m = mean_trace([a, b])
    assert m[0]["vrf"] == 2.0 and m[0]["gap"] == 2.0 and m[0]["paths"] == 2
    assert m[1]["vrf"] == 0.5 and m[1]["paths"] == 1
    assert m[0]["rel_error"] is None
    assert list(_rec(3).row()) == [getattr(_rec(3), c) for c in CSV_COLUMNS]


def test_csv_column_contract():
    assert CSV_COLUMNS == ("k", "gamma_k", "l_k", "N_k", "oracle_calls_cum", "vrf", "nat_residual", "gap",
                           "rel_error", "wall_ms")


def test_entropy_residual_zero_at_fixed_point():
    gen, sim = ShiftedEntropy(0.01), Simplex(3)
    x = np.array([0.2, 0.3, 0.5])
    # a constant operator on the simplex does not move x
    assert natural_residual(x, np.full(3, 0.7), 2.0, gen, sim) <= 1e-12
