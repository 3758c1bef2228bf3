import numpy as np
import pytest
from scipy.optimize import nnls

from apig.prox import gradient_mapping, stationarity_residual
from apig.problems import (lasso_duality_gap, make_lasso, make_nnls,
                           make_nonconvex_quartic, problem_from_json)


@pytest.fixture(scope="module")
def problems():
    return [make_nnls(20, 10, 1), make_lasso(20, 10, 0.5, 2), make_nonconvex_quartic(6, 3)]


def test_gradients_match_central_differences(problems):
    rng = np.random.default_rng(0)
    for prob in problems:
        for _ in range(100):
            x = rng.uniform(-1.5, 1.5, prob.dim)
            g = prob.grad(x)
            fd = np.empty(prob.dim)
            for j in range(prob.dim):
                e = np.zeros(prob.dim)
                e[j] = 1e-6
                fd[j] = (prob.f(x + e) - prob.f(x - e)) / 2e-6
            assert np.linalg.norm(fd - g) <= 1e-6 * max(1.0, np.linalg.norm(g))


def test_hessian_norm_below_L(problems):
    rng = np.random.default_rng(1)
    for prob in problems:
        n = prob.dim
        for _ in range(100):
            lo = -2.0 if prob.name == "quartic" else -5.0
            x = rng.uniform(lo, -lo, n)
            H = np.empty((n, n))
            for j in range(n):
                e = np.zeros(n)
                e[j] = 1e-5
                H[:, j] = (prob.grad(x + e) - prob.grad(x - e)) / 2e-5
            assert np.linalg.norm(H, 2) <= 1.01 * prob.lipschitz_L


def test_reference_optima_are_fixed_points(problems):
    for prob in problems:
        x = prob.x_star
        assert stationarity_residual(prob.h, 1.0, x, prob.grad(x)) <= 1e-8
        lam = 1.0 / prob.lipschitz_L
        step = gradient_mapping(prob.h, lam, x, prob.grad(x)).prox_point - x
        assert np.linalg.norm(step) <= 1e-10


def test_nnls_against_scipy():
    prob = make_nnls(20, 10, seed=1)
    A, b = prob.data["A"], prob.data["b"]
    x_ref, _ = nnls(A, b)
    assert prob.convex and prob.lipschitz_L > 0
    assert np.all(prob.x_star >= 0)
    np.testing.assert_allclose(prob.x_star, x_ref, atol=1e-8)


def test_determinism():
    p1, p2 = make_nnls(20, 10, 5), make_nnls(20, 10, 5)
    assert p1.f_star == p2.f_star
    np.testing.assert_array_equal(p1.x_star, p2.x_star)


def test_lasso_large_weight_gives_zero():
    prob = make_lasso(20, 10, 1.0, seed=4)
    A, b = prob.data["A"], prob.data["b"]
    big = make_lasso(20, 10, 1.01 * np.max(np.abs(A.T @ b)), seed=4)
    np.testing.assert_array_equal(big.x_star, 0.0)


def test_lasso_duality_gap():
    prob = make_lasso(20, 10, 0.5, seed=2)
    assert lasso_duality_gap(prob.data["A"], prob.data["b"], 0.5, prob.x_star) <= 1e-8


def test_lasso_sparsity_monotone():
    nnz = [np.count_nonzero(make_lasso(20, 10, w, seed=6).x_star) for w in (0.1, 1.0, 5.0)]
    assert nnz[0] >= nnz[1] >= nnz[2]


def test_lasso_rejects_bad_weight():
    with pytest.raises(ValueError):
        make_lasso(5, 3, 0.0, 0)


def test_quartic_optimum_near_wells():
    prob = make_nonconvex_quartic(10, seed=9)
    assert not prob.convex and prob.lipschitz_L == 11.0
    assert np.all(np.abs(np.abs(prob.x_star) - 1.0) < 0.1)
    assert stationarity_residual(prob.h, 1.0, prob.x_star, prob.grad(prob.x_star)) <= 1e-8
    # global optimum: no sign flip of any coordinate does better
    for j in range(10):
        x = prob.x_star.copy()
        x[j] = -x[j]
        assert prob.F(x) >= prob.f_star


def test_quartic_f_star_by_grid():
    prob = make_nonconvex_quartic(3, seed=1)
    tilt = prob.data["tilt"]
    s = np.linspace(-2, 2, 400001)
    best = sum(np.min(0.25 * (s * s - 1) ** 2 + t * s) for t in tilt)
    assert prob.f_star == pytest.approx(best, abs=1e-9)


@pytest.mark.parametrize("maker", [lambda: make_nnls(8, 4, 0), lambda: make_lasso(8, 4, 0.2, 0),
                                   lambda: make_nonconvex_quartic(4, 0)])
def test_json_round_trip(maker):
    p = maker()
    q = problem_from_json(p.to_json())
    assert q.name == p.name and q.f_star == pytest.approx(p.f_star, abs=1e-14)
    x = np.linspace(0, 1, p.dim)
    assert q.F(x) == p.F(x)
