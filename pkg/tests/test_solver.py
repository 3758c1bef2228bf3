import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from apig.oracle import (ConstantSequence, ErrorBudget, ExactOracle, NoisyOracle,
                         PowerSequence)
from apig.problems import make_nnls, make_nonconvex_quartic
from apig.prox import NonnegIndicator, Zero, stationarity_residual
from apig.solver import (ApigConfig, Status, abb_stepsize, check_ls_b1, check_ls_b2,
                         initial_trial_stepsize, relaxation_nu, run,
                         stepsize_floor, termination_delta, upsilon1, write_trace_csv)


def const_budget(eta_g=0.0, a=0.0, b=0.0, eta_f=0.0):
    # constant sequences only to evaluate formulas at a single index
    bud = ErrorBudget(a=a, b=b)
    object.__setattr__(bud, "eta_g", ConstantSequence(eta_g))
    object.__setattr__(bud, "eta_f", ConstantSequence(eta_f))
    return bud


@pytest.mark.parametrize("lam, a, b, expected", [(1, 0, 0, 0.5), (1, 0.5, 0.25, 1.0),
                                                 (4, 1, 0, 2.0)])
def test_upsilon1(lam, a, b, expected):
    assert upsilon1(lam, a, b) == pytest.approx(expected)


def test_relaxation_nu():
    assert relaxation_nu(1.0, ErrorBudget(), 0) == 0.0
    assert relaxation_nu(1.0, const_budget(0.1, eta_f=0.01), 0) == pytest.approx(0.025)
    bud = const_budget(1.0)
    object.__setattr__(bud, "a", 1.0)
    assert relaxation_nu(4.0, bud, 0) == pytest.approx(2.0)


def test_ls_b1_examples():
    assert not check_ls_b1(1.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.1, 0.0)
    assert check_ls_b1(0.9, 0.0, 1.0, 0.0, 1.0, 1.0, 0.1, 0.0)
    assert check_ls_b1(1.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.1, 0.2)


def test_ls_b2_examples():
    # f = ||x||^2/2 at x = [1], g = [1]
    assert check_ls_b2(0.0, 0.5, [1.0], [-1.0], 1.0, 0.0)
    assert not check_ls_b2(0.5, 0.5, [1.0], [-2.0], 2.0, 0.0)
    assert check_ls_b2(0.5, 0.5, [1.0], [-2.0], 2.0, 10.0)


@pytest.mark.parametrize("i, y, expected", [(0, [2, 0], 0.5), (1, [2, 0], 0.5),
                                            (2, [0, 1], 1e10), (3, [0, 0], 1e10)])
def test_abb(i, y, expected):
    assert abb_stepsize([1.0, 0.0], y, i) == pytest.approx(expected)


def test_abb_alternates():
    s, y = np.array([1.0, 1.0]), np.array([1.0, 3.0])
    assert abb_stepsize(s, y, 0) == pytest.approx(2 / 4)
    assert abb_stepsize(s, y, 1) == pytest.approx(4 / 10)


def test_initial_trial_stepsize():
    cfg = ApigConfig(lambda0=0.3)
    assert initial_trial_stepsize(cfg, 0, 5.0) == 0.3
    assert initial_trial_stepsize(cfg, 2, 1e12) == 1e10
    assert initial_trial_stepsize(cfg, 3, 1e-12) == 1e-10
    assert initial_trial_stepsize(cfg, 4, 2.0) == 2.0


def test_termination_delta():
    assert termination_delta(0.0, ErrorBudget(), 0, 1.0, 1.0) == 0.0
    assert termination_delta(0.3, const_budget(0.4), 0, 1.0, 1.0) == pytest.approx(0.7)
    assert termination_delta(1.0, const_budget(a=1.0 - 1e-16), 0, 2.0, 2.0) == \
        pytest.approx(2.0)


@pytest.mark.parametrize("kw", [dict(theta=0.0), dict(alpha=1.0), dict(ls_variant="B3"),
                                dict(lambda0=1e11), dict(epsilon=0.0)])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        ApigConfig(**kw)


def test_config_relative_constant_limits():
    with pytest.raises(ValueError):
        ApigConfig(budget=ErrorBudget(a=0.6), ls_variant="B2")
    ApigConfig(budget=ErrorBudget(a=0.6), ls_variant="B1")
    assert ApigConfig(ls_variant="B2").effective_theta == 0.5


finite = st.floats(-100, 100)


@given(arrays(np.float64, 3, elements=finite), arrays(np.float64, 3, elements=finite),
       st.floats(1e-3, 10), finite, finite, st.floats(0, 1))
def test_b2_implies_b1_half(x, g, lam, f_cur, f_trial, nu):
    # with h the nonnegative indicator and a feasible base point
    h = NonnegIndicator()
    x = np.abs(x)
    xt = h.prox(x - lam * g, lam)
    step = xt - x
    if check_ls_b2(f_trial, f_cur, g, step, lam, nu):
        assert check_ls_b1(f_trial, 0.0, f_cur, 0.0, np.linalg.norm(step), lam, 0.5,
                           nu + 1e-9 * (1 + abs(f_cur)))


def test_run_quadratic():
    target = np.array([3.0, -3.0])
    oracle = ExactOracle(lambda x: (0.5 * float((x - target) @ (x - target)), x - target))
    res = run(oracle, Zero(), ApigConfig(epsilon=1e-8), np.zeros(2))
    assert res.status is Status.CONVERGED
    np.testing.assert_allclose(res.x_final, target, atol=1e-8)
    F = lambda x: 0.5 * float((x - target) @ (x - target))
    for r, r_next in zip(res.trace, res.trace[1:]):
        assert F(r_next.x) - F(r.x) <= -1e-4 * r.lam / 2 * r.g_mapped_norm ** 2 + 1e-12


def test_run_noisy_nnls_matches_reference():
    prob = make_nnls(20, 10, seed=1)
    bud = ErrorBudget(eta_g=PowerSequence(1e-2, 1.2), eta_f=PowerSequence(1e-2, 1.2))
    cfg = ApigConfig(epsilon=1e-6, budget=bud)
    oracle = NoisyOracle(prob.fun, prob.h, bud, seed=3,
                         lam_floor=stepsize_floor(cfg, prob.lipschitz_L))
    res = run(oracle, prob.h, cfg, np.zeros(10))
    assert res.converged
    assert np.linalg.norm(res.x_final - prob.x_star) <= 1e-4


@pytest.mark.parametrize("eps", [1e-3, 1e-5])
def test_run_quartic_stationarity(eps):
    prob = make_nonconvex_quartic(8, seed=2)
    res = run(ExactOracle(prob.fun), prob.h, ApigConfig(epsilon=eps), np.zeros(8))
    assert res.converged
    lam = res.trace[-1].lam
    assert stationarity_residual(prob.h, lam, res.x_final, prob.grad(res.x_final)) <= 2 * eps


def test_start_outside_domain_projected():
    oracle = ExactOracle(lambda x: (0.5 * float(x @ x), x.copy()))
    res = run(oracle, NonnegIndicator(), ApigConfig(), np.array([-1.0, 2.0]))
    assert res.converged and np.all(res.trace[0].x >= 0)


class _LyingOracle:
    """Reports a gradient pointing uphill; the line search cannot succeed."""

    def evaluate(self, x, i, context=None):
        from apig.oracle import InexactEval
        return InexactEval(float(x @ x), None if context and context.trial else -x - 1.0)


def test_ls_failure_status():
    res = run(_LyingOracle(), Zero(), ApigConfig(ls_cap=20), np.ones(2))
    assert res.status is Status.LS_FAILURE


def test_max_iters_status():
    oracle = ExactOracle(lambda x: (0.5 * float(x @ x), x.copy()))
    res = run(oracle, Zero(), ApigConfig(epsilon=1e-300, max_outer_iters=3,
                                         lambda0=0.1), np.ones(2))
    assert res.status is Status.MAX_ITERS and res.n_iter == 3


def test_trace_csv(tmp_path):
    oracle = ExactOracle(lambda x: (0.5 * float(x @ x), x.copy()))
    res = run(oracle, Zero(), ApigConfig(), np.ones(2))
    path = tmp_path / "trace.csv"
    write_trace_csv(res.trace, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "i,lambda,ls_trials,g_mapped_norm,delta_g,nu,f_inexact,inner_cost"
    assert len(lines) == res.n_iter + 1
    assert math.isclose(float(lines[1].split(",")[1]), res.trace[0].lam)
