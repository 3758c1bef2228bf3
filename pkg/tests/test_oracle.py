import numpy as np
import pytest
from hypothesis import given, strategies as st

from apig.oracle import (ConstantSequence, ErrorBudget, EvalContext, ExactOracle,
                         InexactEval, NoisyOracle, PowerSequence,
                         check_function_condition, check_gradient_condition,
                         inject_function_error, inject_gradient_error)
from apig.prox import NonnegIndicator, Zero


def budget(eta_g=0.0, a=0.0, b=0.0, eta_f=0.0, c=0.0, theta=None):
    return ErrorBudget(ConstantSequence(eta_g) if eta_g == 0 else PowerSequence(eta_g, 1.0),
                       a, b,
                       ConstantSequence(eta_f) if eta_f == 0 else PowerSequence(eta_f, 1.5),
                       c, theta)


def test_gradient_condition_examples():
    b = budget(eta_g=0.1)
    assert check_gradient_condition([0.0, 0.0], b, 0, 1.0, 5.0)
    assert check_gradient_condition([0.1, 0.0], b, 0, 1.0, 0.0)
    assert not check_gradient_condition([0.2, 0.0], b, 0, 1.0, 0.0)


def test_function_condition_examples():
    b = budget(eta_f=0.01, c=0.025, theta=0.1)
    d = np.sqrt(0.015 / 0.025)
    assert check_function_condition(0.0, b, 0, 1.0, 0.0)
    assert check_function_condition(0.025, b, 0, 1.0, d)
    assert not check_function_condition(0.05, b, 0, 1.0, d)


def test_power_sequence():
    s = PowerSequence.from_deltas(2, 1.2)
    assert s(0) == pytest.approx(1e-2)
    assert s(9) == pytest.approx(1e-2 * 10 ** -1.2)
    assert s.summable and s.square_summable
    assert not PowerSequence(1.0, 0.8).summable
    assert PowerSequence(1.0, 0.8).square_summable


@pytest.mark.parametrize("kw", [dict(a=1.0), dict(a=-0.1), dict(b=-1.0),
                                dict(c=0.3, theta=0.5), dict(c=-0.1)])
def test_budget_rejects_bad_constants(kw):
    with pytest.raises(ValueError):
        budget(**kw)


def test_budget_rejects_non_summable():
    with pytest.raises(ValueError):
        ErrorBudget(eta_f=PowerSequence(1.0, 1.0))
    with pytest.raises(ValueError):
        ErrorBudget(eta_g=ConstantSequence(1e-3))
    with pytest.raises(ValueError):
        PowerSequence(-1.0, 2.0)


def test_inexact_eval_rejects_nonfinite():
    with pytest.raises(ValueError):
        InexactEval(np.nan)
    with pytest.raises(ValueError):
        InexactEval(1.0, np.array([np.inf]))


def test_zero_budget_injectors_are_identity():
    b = budget()
    g = np.array([1.0, -2.0])
    noisy, ok = inject_gradient_error(g, b, 3, Zero(), 1.0, np.zeros(2), 0)
    assert ok
    np.testing.assert_array_equal(noisy, g)
    assert inject_function_error(4.0, b, 3, 1.0, 2.0, 0) == 4.0


def test_absolute_gradient_budget():
    b = budget(eta_g=0.5)
    g = np.array([1.0, 1.0, 1.0])
    for seed in range(20):
        noisy, ok = inject_gradient_error(g, b, 0, NonnegIndicator(), 1.0, np.ones(3), seed)
        assert ok and np.linalg.norm(noisy - g) <= 0.5 + 1e-15


def test_relative_budget_zero_h():
    b = budget(a=0.5)
    g = np.array([3.0, -1.0])
    for seed in range(20):
        noisy, _ = inject_gradient_error(g, b, 0, Zero(), 2.0, np.zeros(2), seed, fraction=1.0)
        err = noisy - g
        # displacement is lam * ||noisy|| when h = 0
        assert check_gradient_condition(err, b, 0, 2.0, 2.0 * np.linalg.norm(noisy))
        assert np.linalg.norm(err) <= 0.5 * np.linalg.norm(noisy) + 1e-12
        assert np.linalg.norm(err) > 0


def test_function_error_saturation():
    b = budget(eta_f=0.1)
    vals = {round(inject_function_error(1.0, b, 0, None, None, s, fraction=1.0), 12)
            for s in range(20)}
    assert vals == {0.9, 1.1}


def test_function_error_relative_bound():
    b = budget(c=0.025, theta=0.1)
    for s in range(20):
        e = inject_function_error(0.0, b, 0, 2.0, 2.0, s)
        assert abs(e) <= 0.05 + 1e-15


lam_st = st.floats(1e-3, 1e2)


@given(st.integers(0, 10_000), st.floats(0, 1), st.floats(0, 0.9), st.floats(0, 2),
       lam_st, st.integers(0, 50))
def test_injected_gradient_always_certified(seed, eta, a, b, lam, i):
    bud = ErrorBudget(PowerSequence(eta, 1.0), a, b)
    rng = np.random.default_rng(seed)
    x = rng.uniform(0, 2, 4)
    g = rng.standard_normal(4)
    h = NonnegIndicator()
    noisy, ok = inject_gradient_error(g, bud, i, h, lam, x, seed)
    disp = np.linalg.norm(h.prox(x - lam * noisy, lam) - x)
    assert ok and check_gradient_condition(noisy - g, bud, i, lam, disp)


@given(st.integers(0, 10_000), st.floats(0, 1), st.floats(0, 0.2), lam_st, st.floats(0, 5))
def test_injected_function_error_certified(seed, eta, c, lam, disp):
    bud = ErrorBudget(eta_f=PowerSequence(eta, 2.0), c=c, theta=0.8)
    e = inject_function_error(0.0, bud, 2, lam, disp, seed)
    assert check_function_condition(e, bud, 2, lam, disp)


def quad(x):
    return 0.5 * float(x @ x), x.copy()


def test_noisy_oracle_deterministic_and_ladder_certified():
    bud = ErrorBudget(PowerSequence(0.3, 1.0), 0.2, 0.1, PowerSequence(0.1, 2.0))
    h = NonnegIndicator()
    o = NoisyOracle(quad, h, bud, seed=11, alpha=0.5, lam_floor=1e-3)
    x = np.array([0.5, 1.0, 2.0])
    e1 = o.evaluate(x, 4, EvalContext(lam=4.0))
    e2 = o.evaluate(x, 4, EvalContext(lam=4.0))
    np.testing.assert_array_equal(e1.gradient, e2.gradient)
    assert e1.f_value == e2.f_value
    err = e1.gradient - x
    lam = 4.0
    while lam >= 1e-3:
        disp = np.linalg.norm(h.prox(x - lam * e1.gradient, lam) - x)
        assert check_gradient_condition(err, bud, 4, lam, disp)
        lam *= 0.5
    assert abs(e1.f_value - quad(x)[0]) <= bud.eta_f(4)
    t = o.evaluate(x, 4, EvalContext(lam=1.0, displacement=0.3, trial=True))
    assert t.gradient is None


def test_exact_oracle():
    e = ExactOracle(quad).evaluate(np.array([3.0, 4.0]), 0)
    assert e.f_value == 12.5 and e.cost == 0
