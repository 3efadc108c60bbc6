import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from bregsvi.errors import DimensionMismatch, Infeasible, InvalidParameter
from bregsvi.sets import Box, L1Ball, PolyhedronCapL1, Product, Simplex, project_l1_ball, project_simplex

finite = st.floats(-10, 10, allow_nan=False)


def vec(n):
    return arrays(np.float64, n, elements=finite)


def sample_in(set_, rng, count):
    """Random feasible points: project random Gaussians (projection is exact)."""
    return [set_.project(rng.normal(scale=1.5, size=set_.dim), 1e-12) for _ in range(count)]


SETS = [
    Box.uniform(4, -1.0, 2.0),
    Simplex(4, 2.0),
    L1Ball(4, 1.5),
    PolyhedronCapL1(np.array([[1.0, 1.0, 0.0, -1.0], [0.5, -1.0, 1.0, 0.0]]), np.array([0.5, 0.8]), 1.0),
    Product((Box.uniform(2, 0.0, 1.0), L1Ball(2, 1.0))),
]


# -- contains ---------------------------------------------------------------

def test_contains_examples():
    assert Box.uniform(2, 0, 2).contains(np.array([1.0, 1.0]), 0.0)
    assert not L1Ball(2, 1.0).contains(np.array([0.6, 0.6]), 0.0)
    P = PolyhedronCapL1(np.array([[1.0, 1.0]]), np.array([0.5]), 1.0)
    assert P.contains(np.array([0.3, 0.1]), 0.0)
    assert not P.contains(np.array([0.3, 0.3]), 0.0)


def test_contains_rejects_wrong_dimension():
    with pytest.raises(DimensionMismatch):
        Box.uniform(3, 0, 1).contains(np.zeros(2))


def test_constructor_validation():
    with pytest.raises(InvalidParameter):
        Box(np.array([1.0]), np.array([0.0]))
    with pytest.raises(Infeasible):
        # x1 + x2 <= -5 misses the unit l1 ball
        PolyhedronCapL1(np.array([[1.0, 1.0]]), np.array([-5.0]), 1.0)


def test_polyhedron_with_negative_rhs_but_nonempty():
    P = PolyhedronCapL1(np.array([[1.0, 0.0]]), np.array([-0.5]), 1.0)
    p = P.interior_point()
    assert P.contains(p, 1e-9) and p[0] <= -0.5 + 1e-9


# -- projection -------------------------------------------------------------

def test_projection_examples():
    assert Box.uniform(2, 0, 2).project(np.array([-1.0, 3.0])) == pytest.approx([0, 2])
    assert L1Ball(2, 1.0).project(np.array([1.0, 1.0])) == pytest.approx([0.5, 0.5])


def test_l1_projection_against_boundary_grid():
    # brute force: the projection of (1, 1) lies on the boundary |z1| + |z2| = 1
    t = np.linspace(0, 1, 200001)
    cands = np.concatenate([np.column_stack([t, 1 - t]), np.column_stack([-t, 1 - t]),
                            np.column_stack([t, t - 1]), np.column_stack([-t, t - 1])])
    best = cands[np.argmin(((cands - 1.0) ** 2).sum(axis=1))]
    assert L1Ball(2, 1.0).project(np.array([1.0, 1.0])) == pytest.approx(best, abs=1e-5)


@pytest.mark.parametrize("set_", SETS, ids=lambda s: s.describe()["kind"])
def test_projection_of_member_is_identity(set_, rng):
    for x in sample_in(set_, rng, 20):
        assert set_.project(x, 1e-12) == pytest.approx(x, abs=1e-9)


@pytest.mark.parametrize("set_", SETS, ids=lambda s: s.describe()["kind"])
def test_projection_idempotent_and_optimal(set_, rng):
    tol = 1e-10
    feas = np.array(sample_in(set_, rng, 1000))
    for _ in range(10):
        x = rng.normal(scale=3.0, size=set_.dim)
        p = set_.project(x, tol)
        assert set_.contains(p, 1e-8)
        assert set_.project(p, tol) == pytest.approx(p, abs=1e-8)
        d = np.linalg.norm(x - p)
        assert np.all(np.linalg.norm(feas - x, axis=1) >= d - 2 * tol - 1e-9)


@given(vec(5), st.floats(0.1, 5))
def test_simplex_projection_properties(v, radius):
    p = project_simplex(v, radius)
    assert np.all(p >= 0) and p.sum() == pytest.approx(radius)
    # optimality: v - p is constant on the support and no larger elsewhere
    g = v - p
    support = p > 1e-12
    tau = g[support].mean()
    assert g[support] == pytest.approx(np.full(support.sum(), tau), abs=1e-9)
    assert np.all(g[~support] <= tau + 1e-9)


@given(vec(5), st.floats(0.1, 5))
def test_l1_projection_properties(v, radius):
    p = project_l1_ball(v, radius)
    assert np.abs(p).sum() <= radius + 1e-9
    assert np.all(p * v >= -1e-12)  # signs preserved
    if np.abs(v).sum() <= radius:
        assert p == pytest.approx(v)


# -- linear minimization ----------------------------------------------------

def test_linear_minimize_examples():
    z, val = Box.uniform(2, 0, 2).linear_minimize(np.array([1.0, -1.0]))
    assert z == pytest.approx([0, 2]) and val == pytest.approx(-2)
    z, val = L1Ball(2, 1.0).linear_minimize(np.array([3.0, -4.0]))
    assert z == pytest.approx([0, 1]) and val == pytest.approx(-4)
    z, val = Simplex(3).linear_minimize(np.array([5.0, 1.0, 2.0]))
    assert z == pytest.approx([0, 1, 0]) and val == pytest.approx(1)


def test_l1_linear_minimize_by_vertex_enumeration(rng):
    ball = L1Ball(4, 2.0)
    verts = [s * 2.0 * e for e in np.eye(4) for s in (1, -1)]
    for _ in range(50):
        c = rng.normal(size=4)
        _, val = ball.linear_minimize(c)
        assert val == pytest.approx(min(c @ v for v in verts))


def test_polyhedron_linear_minimize_against_brute_force(rng):
    P = SETS[3]
    feas = np.array(sample_in(P, rng, 1000))
    for _ in range(10):
        c = rng.normal(size=4)
        z, val = P.linear_minimize(c)
        assert P.contains(z, 1e-8)
        assert val == pytest.approx(c @ z)
        assert np.all(feas @ c >= val - 1e-9)


@pytest.mark.parametrize("set_", SETS, ids=lambda s: s.describe()["kind"])
def test_linear_minimize_is_a_lower_bound(set_, rng):
    feas = np.array(sample_in(set_, rng, 1000))
    c = rng.normal(size=set_.dim)
    z, val = set_.linear_minimize(c)
    assert set_.contains(z, 1e-8)
    assert np.all(feas @ c >= val - 1e-9)


def test_product_decomposes_blockwise(rng):
    blocks = (Box.uniform(2, 0.0, 1.0), Simplex(3), L1Ball(2, 0.5))
    P = Product(blocks)
    assert P.dim == 7
    x = rng.normal(size=7)
    parts = P.blocks(x)
    assert np.array_equal(P.project(x), np.concatenate([b.project(p) for b, p in zip(blocks, parts)]))
    _, val = P.linear_minimize(x)
    assert val == pytest.approx(sum(b.linear_minimize(p)[1] for b, p in zip(blocks, parts)))


def test_box_linear_minimize_matches_vertex_enumeration(rng):
    box = Box(np.array([-1.0, 0.0, 2.0]), np.array([1.0, 3.0, 2.5]))
    verts = [np.array(v) for v in itertools.product(*zip(box.lower, box.upper))]
    c = rng.normal(size=3)
    assert box.linear_minimize(c)[1] == pytest.approx(min(c @ v for v in verts))
