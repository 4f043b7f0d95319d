import math

import numpy as np
import pytest
from scipy import sparse

from cdkit.data import SyntheticSpec, generate_linear_regression
from cdkit.numerics import weighted_norm_sq
from cdkit.objectives import (
    DegenerateColumnError,
    GradientCache,
    LeastSquaresProblem,
    LogisticProblem,
    StaleCacheError,
    strong_convexity,
)


def central_differences(f, beta, h=1e-5):
    g = np.empty_like(beta)
    for i in range(beta.size):
        e = np.zeros_like(beta)
        e[i] = h
        g[i] = (f(beta + e) - f(beta - e)) / (2 * h)
    return g


# -------------------------------------------------------------- values

def test_least_squares_values():
    p = LeastSquaresProblem(np.eye(2), [1.0, 2.0])
    assert p.value([0.0, 0.0]) == 5.0
    assert p.value([1.0, 2.0]) == 0.0
    np.testing.assert_array_equal(p.full_gradient([0.0, 0.0]), [-2.0, -4.0])


def test_logistic_values():
    p = LogisticProblem(np.array([[1.0]]), [1.0])
    assert p.value([0.0]) == pytest.approx(math.log(2), rel=1e-15)
    assert p.full_gradient([0.0])[0] == pytest.approx(-0.5, rel=1e-15)


def test_dimension_mismatch(small_ls, small_logistic):
    with pytest.raises(ValueError):
        small_ls.value(np.zeros(3))
    with pytest.raises(ValueError):
        small_logistic.full_gradient(np.zeros(2))


def test_logistic_rejects_bad_labels():
    with pytest.raises(ValueError):
        LogisticProblem(np.eye(2), [1.0, 0.0])


def test_logistic_stable_for_huge_margins():
    X = np.array([[1.0], [1.0], [-1.0]])
    p = LogisticProblem(X, [1.0, -1.0, 1.0])
    for b in (1e4, -1e4):
        v = p.value([b])
        g = p.full_gradient([b])
        assert np.isfinite(v) and np.all(np.isfinite(g))
    # two of three points have margin -1e4 at beta = 1e4: loss ~ 2e4 / 3
    assert p.value([1e4]) == pytest.approx(2e4 / 3, rel=1e-12)


def test_sparse_and_dense_logistic_agree(rng):
    X = rng.standard_normal((50, 7)) * (rng.random((50, 7)) < 0.4)
    X[0] = 1.0  # no empty columns
    labels = np.where(rng.random(50) < 0.5, -1.0, 1.0)
    d = LogisticProblem(X, labels)
    s = LogisticProblem(sparse.csr_matrix(X), labels)
    beta = rng.standard_normal(7)
    assert d.value(beta) == pytest.approx(s.value(beta), rel=1e-14)
    np.testing.assert_allclose(d.full_gradient(beta), s.full_gradient(beta), rtol=1e-12)
    np.testing.assert_allclose(d.coordinate_smoothness().L, s.coordinate_smoothness().L)


# ----------------------------------------------------------- gradients

@pytest.mark.parametrize("trial", range(10))
def test_gradients_match_finite_differences(trial):
    r = np.random.default_rng(trial)
    X = r.standard_normal((25, 6))
    ls = LeastSquaresProblem(X, r.standard_normal(25))
    lg = LogisticProblem(X, np.where(r.random(25) < 0.5, -1.0, 1.0))
    beta = r.standard_normal(6)
    for p in (ls, lg):
        fd = central_differences(p.value, beta)
        g = p.full_gradient(beta)
        assert np.linalg.norm(g - fd) <= 1e-6 * np.linalg.norm(g)


# ---------------------------------------------------------------- cache

@pytest.mark.parametrize("fixture", ["small_ls", "small_logistic"])
def test_coordinate_gradient_at_combination(fixture, request, rng):
    p = request.getfixturevalue(fixture)
    c = GradientCache(p, rng.standard_normal(p.dim))
    for _ in range(20):
        c.apply_coordinate_step("z", int(rng.integers(p.dim)), float(rng.standard_normal()))
    gx, gz = p.full_gradient(c.x), p.full_gradient(c.z)
    for i in range(p.dim):
        assert c.coordinate_gradient("y", i, theta=0.0) == pytest.approx(gx[i], abs=1e-12)
        assert c.coordinate_gradient("y", i, theta=1.0) == pytest.approx(gz[i], abs=1e-12)
    for theta in rng.random(5):
        gy = p.full_gradient((1 - theta) * c.x + theta * c.z)
        got = [c.coordinate_gradient("y", i, theta=theta) for i in range(p.dim)]
        np.testing.assert_allclose(got, gy, rtol=0, atol=1e-10)


def test_zero_step_leaves_cache_bitwise(small_logistic, rng):
    c = GradientCache(small_logistic, rng.standard_normal(small_logistic.dim))
    before = (c.x.copy(), c.aux_x.copy(), c.aux_z.copy())
    c.apply_coordinate_step("x", 2, 0.0)
    assert np.array_equal(c.x, before[0])
    assert np.array_equal(c.aux_x, before[1])
    assert np.array_equal(c.aux_z, before[2])


def test_least_squares_diagonal_gram_step():
    p = LeastSquaresProblem(np.eye(2), [1.0, 2.0])
    c = GradientCache(p, np.zeros(2))
    c.apply_coordinate_step("x", 0, 0.75)
    np.testing.assert_array_equal(c.gradient("x"), [-2.0 + 1.5, -4.0])


def test_cache_coherence_short(small_ls, small_logistic, rng):
    for p in (small_ls, small_logistic):
        c = GradientCache(p, np.zeros(p.dim), refresh_period=10_000)
        for _ in range(2000):
            which = "x" if rng.random() < 0.5 else "z"
            c.apply_coordinate_step(which, int(rng.integers(p.dim)), float(rng.standard_normal()))
        assert c.max_deviation() <= 1e-8


def test_cache_refreshes_on_schedule(small_ls):
    c = GradientCache(small_ls, np.zeros(small_ls.dim), refresh_period=5)
    for _ in range(4):
        c.apply_coordinate_step("x", 0, 0.1)
    assert c.refresh_counter == 4
    c.apply_coordinate_step("x", 0, 0.1)
    assert c.refresh_counter == 0


def test_stale_cache_detected(small_ls):
    c = GradientCache(small_ls, np.zeros(small_ls.dim))
    c.aux_x = c.aux_x + 1.0
    with pytest.raises(StaleCacheError):
        c.verify()
    c.refresh_counter = c.refresh_period + 1
    with pytest.raises(StaleCacheError):
        c.coordinate_gradient("x", 0)


def test_step_index_bounds(small_ls):
    c = GradientCache(small_ls, np.zeros(small_ls.dim))
    with pytest.raises(IndexError):
        c.apply_coordinate_step("x", small_ls.dim, 1.0)


# ----------------------------------------------------------- smoothness

def test_smoothness_examples():
    np.testing.assert_array_equal(
        LeastSquaresProblem(np.eye(2), [0.0, 0.0]).coordinate_smoothness().L, [2.0, 2.0])
    L = LogisticProblem(np.array([[3.0]]), [-1.0]).coordinate_smoothness().L
    assert L[0] == pytest.approx(2.25, rel=1e-15)


def test_zero_column_rejected():
    X = np.array([[1.0, 0.0], [2.0, 0.0]])
    with pytest.raises(DegenerateColumnError):
        LeastSquaresProblem(X, [1.0, 1.0])
    with pytest.raises(DegenerateColumnError):
        LogisticProblem(sparse.csr_matrix(X), [1.0, -1.0])


@pytest.mark.parametrize("fixture", ["small_ls", "small_logistic"])
def test_coordinate_lipschitz_and_descent(fixture, request, rng):
    p = request.getfixturevalue(fixture)
    L = p.coordinate_smoothness().L
    for _ in range(1000):
        beta = rng.standard_normal(p.dim) * 3
        i = int(rng.integers(p.dim))
        h = float(rng.standard_normal() * 2)
        moved = beta.copy()
        moved[i] += h
        gi, gi_moved = p.full_gradient(beta)[i], p.full_gradient(moved)[i]
        assert abs(gi_moved - gi) <= L[i] * abs(h) * (1 + 1e-10) + 1e-12
        assert p.value(moved) <= p.value(beta) + h * gi + 0.5 * h * h * L[i] + 1e-10


# ----------------------------------------------------- strong convexity

def test_strong_convexity_identity():
    assert strong_convexity(LeastSquaresProblem(np.eye(2), [3.0, -1.0])) == pytest.approx(1.0)


def test_strong_convexity_singular():
    X = np.array([[1.0, 1.0], [1.0, 1.0], [0.0, 0.0]])
    X = np.column_stack([X, [0.0, 0.0, 1.0]])
    p = LeastSquaresProblem(X, [1.0, 2.0, 3.0])
    assert strong_convexity(p, "exact") == 0.0
    # scaled Hessian = [[1,1,0],[1,1,0],[0,0,1]]: eigenvalues 0, 1, 2
    assert strong_convexity(p, "smallest-positive") == pytest.approx(1.0, rel=1e-12)


def test_strong_convexity_inequality_on_generated_instance():
    p = generate_linear_regression(SyntheticSpec(200, 100, 100.0, seed=3)).problem()
    mu = strong_convexity(p)
    L = p.coordinate_smoothness()
    r = np.random.default_rng(0)
    for _ in range(1000):
        x, y = r.standard_normal(100) * 2, r.standard_normal(100) * 2
        lhs = p.value(y)
        rhs = p.value(x) + p.full_gradient(x) @ (y - x) + 0.5 * mu * weighted_norm_sq(y - x, L)
        assert lhs >= rhs - 1e-9 * max(1.0, abs(lhs))
