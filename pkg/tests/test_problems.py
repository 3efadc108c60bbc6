import math

import mpmath
import numpy as np
import pytest
import sympy

from bregsvi.bregman import Euclidean
from bregsvi.errors import InvalidParameter, OracleFailure
from bregsvi.metrics import natural_residual
from bregsvi.oracle import SampleStream, draw_batch, evaluate
from bregsvi.problems import AffineProblem, FractionalProblem, NashCournot, affine_test_problem
from bregsvi.solvers import deterministic_extragradient


def feasible_points(problem, rng, count):
    """Rejection-sample points of {Ax <= b, ||x||_1 <= radius} (not only its boundary)."""
    out = []
    n = problem.n
    while len(out) < count:
        d = rng.laplace(size=n)
        x = d / np.abs(d).sum() * problem.radius * rng.uniform() ** (1.0 / n)
        if problem.feasible_set.contains(x):
            out.append(x)
    return out


def directional_fd_errors(problem, rng, count, h=1e-6):
    errs = []
    for x in feasible_points(problem, rng, count):
        u, _ = SampleStream(int(rng.integers(2 ** 32))).uniforms(1, problem.words_per_draw)
        V, cbar = problem._decode(u)
        g = problem.sample_eval(x, u)[0]
        d = rng.normal(size=problem.n)
        d /= np.linalg.norm(d)
        fd = (problem.objective(x + h * d, V[0], cbar[0]) - problem.objective(x - h * d, V[0], cbar[0])) / (2 * h)
        errs.append(abs(fd - g @ d) / max(abs(g @ d), 1e-12))
    return np.array(errs)


# -- fractional problems ----------------------------------------------------

@pytest.mark.parametrize("denominator", ["linear", "exponential"])
def test_fractional_oracle_matches_finite_differences(denominator, rng):
    p = FractionalProblem(n=10, instance_seed=1, denominator=denominator)
    errs = directional_fd_errors(p, rng, 25)
    assert errs.max() <= 1e-5


def test_fractional_value_at_origin_symbolic():
    n = 3
    p = FractionalProblem(n=n, instance_seed=4)
    u, _ = SampleStream(8).uniforms(1, p.words_per_draw)
    V, cbar = p._decode(u)
    xs = sympy.symbols("x0:3")
    X = sympy.Matrix(xs)
    M = sympy.Matrix(p.UU + p.kappa * V[0] / np.linalg.norm(V[0]))
    w = sympy.Matrix(p.c + cbar[0])
    phi = sympy.Rational(1, 2) * (X.T * M * X)[0] + sympy.Rational(1, 2) * ((w.T * X)[0] + 4 * n) ** 2
    psi = (sympy.Matrix(p.r).T * X)[0] + p.t + 4 * n
    grad = [sympy.diff(phi / psi, xi).subs({s: 0 for s in xs}) for xi in xs]
    got = p.sample_eval(np.zeros(n), u)[0]
    assert got == pytest.approx([float(gv) for gv in grad], rel=1e-12)
    # and the closed form ((t+4n) 4n w - 8n^2 r) / (t+4n)^2
    t4n = p.t + 4 * n
    assert got == pytest.approx((t4n * 4 * n * (p.c + cbar[0]) - 8 * n * n * p.r) / t4n ** 2, rel=1e-12)


def test_exponential_denominator_high_precision():
    p = FractionalProblem(n=10, denominator="exponential")
    p.t = 0.0
    mpmath.mp.dps = 40
    # n = 10: 8n + 2 = 82 and t + 4n = 40
    expected = 10 ** 4 * (mpmath.exp(mpmath.mpf(82) / 2000) - mpmath.exp(mpmath.mpf(40) / 2000))
    assert p.psi(np.zeros(10)) == pytest.approx(float(expected), rel=1e-12)
    assert p.psi(np.zeros(10)) == pytest.approx(216.50765518723, rel=1e-11)


def test_exponential_denominator_decreases_along_r(rng):
    p = FractionalProblem(n=10, denominator="exponential")
    rhat = p.r / np.linalg.norm(p.r)
    for x in feasible_points(p, rng, 20):
        assert p.psi(x + 1e-3 * rhat) < p.psi(x)


def test_linear_denominator_positive_bound(rng):
    p = FractionalProblem(n=10)
    for x in feasible_points(p, rng, 200):
        assert p.psi(x) >= 4 * p.n - 5


def test_denominator_failure_is_reported():
    p = FractionalProblem(n=3)
    bad = -(p.t + 4 * p.n + 1) * p.r / (p.r @ p.r)
    u, _ = SampleStream(0).uniforms(1, p.words_per_draw)
    with pytest.raises(OracleFailure):
        p.sample_eval(bad, u)
    with pytest.raises(InvalidParameter):
        FractionalProblem(n=2, denominator="exponential")


def test_per_sample_path_agrees_with_sufficient_statistics():
    p = FractionalProblem(n=6, instance_seed=2)
    u, _ = SampleStream(3).uniforms(50, p.words_per_draw)
    x = np.linspace(-0.1, 0.1, 6)
    direct = p.sample_eval(x, u).mean(axis=0)
    assert p.batch_mean(x, p.prepare(u)) == pytest.approx(direct, rel=1e-12, abs=1e-14)
    # a single frozen draw: the batch "mean" is exactly that sample
    assert p.batch_mean(x, p.prepare(u[:1])) == pytest.approx(p.sample_eval(x, u[:1])[0], rel=1e-12)


@pytest.mark.parametrize("problem", [FractionalProblem(n=10), FractionalProblem(n=10, denominator="exponential"),
                                     NashCournot(I=4, J=3), AffineProblem(n=8, noise=0.5)],
                         ids=["frac-lin", "frac-exp", "nash", "affine"])
def test_sample_mean_within_five_sigma(problem):
    N = 10_000
    x = problem.feasible_set.project(np.full(problem.dim, 0.05))
    u, _ = SampleStream(17).uniforms(N, problem.words_per_draw)
    samples = problem.sample_eval(x, u)
    v = math.sqrt(samples.var(axis=0).sum())
    assert np.linalg.norm(samples.mean(axis=0) - problem.mean_eval(x)) <= 5 * v / math.sqrt(N)


@pytest.mark.parametrize("denominator", ["linear", "exponential"])
def test_fractional_values_finite_on_random_feasible_points(denominator, rng):
    p = FractionalProblem(n=10, denominator=denominator)
    batch, _ = draw_batch(p, SampleStream(0), 64)
    for x in feasible_points(p, rng, 10_000):
        evaluate(p, x, batch)  # raises OracleFailure on non-finite output


# -- Nash-Cournot -----------------------------------------------------------

def test_nash_mean_block_formula(rng):
    p = NashCournot(I=3, J=4, instance_seed=5)
    x = rng.uniform(0, 2, 12)
    X = x.reshape(3, 4)
    F = p.mean_eval(x).reshape(3, 4)
    for i in range(3):
        others = X.sum(axis=0) - X[i]
        assert F[i] == pytest.approx(2 * p.b * X[i] + 4.0 + p.b * others - 45.0)


def test_nash_at_origin_is_negative():
    p = NashCournot(I=3, J=4)
    u, _ = SampleStream(1).uniforms(100, p.words_per_draw)
    assert np.all(p.sample_eval(np.zeros(12), u) < 0)


def test_nash_exchange_symmetry():
    p = NashCournot(I=2, J=3, c_bounds=(4.0, 4.0), a_bounds=(45.0, 45.0))
    x = np.array([0.3, 1.0, 1.7, 0.3, 1.0, 1.7])
    u, _ = SampleStream(2).uniforms(1, p.words_per_draw)
    F = p.sample_eval(x, u)[0]
    assert F[:3] == pytest.approx(F[3:])


def test_nash_mean_operator_is_monotone(rng):
    p = NashCournot(I=10, J=10)
    for _ in range(1000):
        x, y = rng.uniform(0, 2, 100), rng.uniform(0, 2, 100)
        assert (p.mean_eval(x) - p.mean_eval(y)) @ (x - y) >= -1e-10


def test_nash_lipschitz_bound_is_the_spectral_norm():
    p = NashCournot(I=4, J=3, instance_seed=2)
    J = np.column_stack([p.mean_eval(e) - p.mean_eval(np.zeros(12)) for e in np.eye(12)])
    assert np.linalg.norm(J, 2) == pytest.approx(p.lipschitz, rel=1e-12)


def test_nash_reference_solution_residual():
    p = NashCournot(I=10, J=10)
    xs = p.reference_solution()
    assert p.feasible_set.contains(xs, 1e-12)
    assert natural_residual(xs, p.mean_eval(xs), 1.0, Euclidean(1.0), p.feasible_set, 1e-12) <= 1e-9
    # cached and returned as a copy
    xs[0] = -1
    assert p.reference_solution()[0] != -1


# -- affine test problem ----------------------------------------------------

def test_affine_solution_properties():
    oracle, box, xs = affine_test_problem(10, 50.0, seed=3)
    assert np.all(np.abs(xs) < 1)  # interior
    assert np.array_equal(oracle.mean_eval(xs), np.zeros(10))
    for a in (0.1, 1.0, 10.0):
        assert natural_residual(xs, oracle.mean_eval(xs), a, Euclidean(2.0), box) == 0.0


def test_affine_lipschitz_and_condition():
    p = AffineProblem(n=12, condition=100.0, instance_seed=1)
    eig = np.linalg.eigvalsh(p.M)
    assert p.lipschitz == pytest.approx(eig.max(), rel=1e-12)
    assert eig.max() / eig.min() == pytest.approx(100.0, rel=1e-9)


def test_affine_noise_is_bounded_and_centered():
    p = AffineProblem(n=6, noise=0.7, instance_seed=2)
    u, _ = SampleStream(5).uniforms(20_000, p.words_per_draw)
    dev = p.sample_eval(p.x0, u) - p.mean_eval(p.x0)
    assert np.linalg.norm(dev, axis=1).max() <= p.noise_bound + 1e-12
    assert np.abs(dev.mean(axis=0)).max() < 5 * dev.std(axis=0).max() / math.sqrt(len(dev))


def test_affine_deterministic_run_converges():
    p = AffineProblem(n=10, condition=20.0, noise=0.0, instance_seed=4)
    res = deterministic_extragradient(p, p.feasible_set, Euclidean(1.0), p.x0, gamma=0.5 / p.lipschitz,
                                      max_iter=20_000, tol=1e-9)
    assert natural_residual(res.x, p.mean_eval(res.x), 1.0, Euclidean(1.0), p.feasible_set) <= 1e-8
    assert np.linalg.norm(res.x - p.x_star) <= 1e-6


def test_spec_hash_identifies_instances():
    assert NashCournot(instance_seed=1).spec_hash() == NashCournot(instance_seed=1).spec_hash()
    assert NashCournot(instance_seed=1).spec_hash() != NashCournot(instance_seed=2).spec_hash()
    assert FractionalProblem(n=10).spec_hash() != FractionalProblem(n=10, denominator="exponential").spec_hash()
