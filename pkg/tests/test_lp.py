import numpy as np
import pytest
from scipy.optimize import linprog

from bregsvi.errors import Infeasible, Unbounded
from bregsvi.lp import linprog_dense


def test_small_textbook_lp():
    # max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18  ->  (2, 6), value 36
    res = linprog_dense([-3, -5], A_ub=[[1, 0], [0, 2], [3, 2]], b_ub=[4, 12, 18])
    assert res.x == pytest.approx([2, 6])
    assert res.value == pytest.approx(-36)


def test_equality_constraints():
    res = linprog_dense([1, 2, 3], A_eq=[[1, 1, 1]], b_eq=[1])
    assert res.x == pytest.approx([1, 0, 0])
    assert res.value == pytest.approx(1)


def test_negative_rhs_needs_phase_one():
    # x + y >= 2 written as -x - y <= -2
    res = linprog_dense([1, 1], A_ub=[[-1, -1]], b_ub=[-2])
    assert res.value == pytest.approx(2)


def test_infeasible_and_unbounded():
    with pytest.raises(Infeasible):
        linprog_dense([1, 1], A_ub=[[1, 1]], b_ub=[-1])
    with pytest.raises(Unbounded):
        linprog_dense([-1, 0], A_ub=[[0, 1]], b_ub=[1])


@pytest.mark.parametrize("trial", range(40))
def test_matches_scipy_on_random_bounded_lps(trial):
    rng = np.random.default_rng(trial)
    m, n = rng.integers(1, 6), rng.integers(1, 7)
    A = rng.normal(size=(m, n))
    b = rng.uniform(0.5, 2.0, m)
    c = rng.normal(size=n)
    # a box x <= 3 keeps every instance bounded
    A_full = np.vstack([A, np.eye(n)])
    b_full = np.concatenate([b, np.full(n, 3.0)])
    ours = linprog_dense(c, A_ub=A_full, b_ub=b_full)
    ref = linprog(c, A_ub=A_full, b_ub=b_full, bounds=[(0, None)] * n, method="highs")
    assert ref.status == 0
    assert ours.value == pytest.approx(ref.fun, abs=1e-8)
    assert np.all(A_full @ ours.x <= b_full + 1e-8) and np.all(ours.x >= -1e-10)
