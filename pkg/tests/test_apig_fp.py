import numpy as np
import pytest

from apig.beamforming import NetworkInstance, dual_reference, recover_primal
from apig.beamforming.algorithms import (ApigFpConfig, apig_fp_a, apig_fp_r, apig_fp_run,
                                         pg_baseline, psg_run, reference_config)
from apig.prox import NonnegIndicator, gradient_mapping
from apig.solver import Status


def scalar(p_bar=100.0):
    return NetworkInstance(np.array([[1.0]]), 1.0, 1.0, p_bar)


def one_active(p_bar=(3.0, 100.0)):
    return NetworkInstance(np.array([[1.0, 0.6], [0.5, 1.0]]), 1.0, 2.0, list(p_bar))


@pytest.mark.parametrize("kw", [dict(varrho=1.0), dict(c0=0.0), dict(b_tilde=-1.0),
                                dict(termination="never"), dict(alpha=0.0)])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        ApigFpConfig(**kw)


def test_variant_factories():
    a, r = apig_fp_a(), apig_fp_r()
    assert a.b_tilde == 0 and a.eta_g_tilde(0) == pytest.approx(1e-2)
    assert r.b_tilde == pytest.approx(0.1) and r.eta_g_tilde(5) == 0.0
    assert pg_baseline().eta_f_tilde(100) == 1e-10


@pytest.mark.parametrize("make", [apig_fp_a, apig_fp_r, pg_baseline])
def test_inactive_budget_stays_at_zero(make):
    res = apig_fp_run(scalar(), make())
    assert res.converged
    np.testing.assert_array_equal(res.x_final, [0.0])
    assert res.n_iter <= 3


@pytest.mark.parametrize("make", [apig_fp_a, apig_fp_r, pg_baseline])
def test_one_active_budget(make):
    inst = one_active()
    res = apig_fp_run(inst, make())
    assert res.converged
    x = res.x_final
    assert x[0] > 1e-3 and x[1] == 0.0
    ev = dual_reference(inst, x)
    sol = recover_primal(inst, ev.beta, ev.p, x)
    assert sol.realized_powers[0] == pytest.approx(3.0, abs=1e-5)
    assert sol.realized_powers[1] < 100.0
    lam = res.trace[-1].lam
    assert gradient_mapping(NonnegIndicator(), lam, x, -ev.gradient).norm <= 10 * 1e-6


def test_trace_records_error_constants():
    res = apig_fp_run(one_active(), apig_fp_a())
    cs = [r.c_value for r in res.trace]
    assert cs[0] >= 100.0 and all(b >= a for a, b in zip(cs, cs[1:]))
    assert res.info["total_fp_iters"] == sum(r.inner_cost for r in res.trace)
    assert res.info["max_x_norm"] >= np.linalg.norm(res.x_final)


def test_deterministic():
    r1 = apig_fp_run(one_active(), apig_fp_r())
    r2 = apig_fp_run(one_active(), apig_fp_r())
    np.testing.assert_array_equal(r1.x_final, r2.x_final)
    assert r1.info["total_fp_iters"] == r2.info["total_fp_iters"]


def test_infeasible_budgets_diverge():
    res = apig_fp_run(one_active((0.2, 0.2)), reference_config(max_outer_iters=5000))
    assert res.status is Status.DIVERGED


def test_max_iters():
    res = apig_fp_run(one_active(), apig_fp_a(max_outer_iters=2))
    assert res.status is Status.MAX_ITERS


def test_rejects_negative_start():
    with pytest.raises(ValueError):
        apig_fp_run(scalar(), apig_fp_a(), x0=[-1.0])


def test_psg_stays_at_zero():
    tr = psg_run(scalar(), None, 1.0, 1.0, 10)
    assert all(np.all(x == 0) for x in tr.x)
    assert np.all(np.diff(tr.best_values) >= 0)


def test_psg_ascends_on_active_instance():
    tr = psg_run(one_active(), None, 0.1, 0.5, 200)
    best = tr.best_values
    assert np.all(np.diff(best) >= 0) and best[-1] > tr.dual_values[0]
    ref = dual_reference(one_active(), apig_fp_run(one_active(), reference_config()).x_final)
    assert best[-1] <= ref.value + 1e-9


def test_psg_validation():
    with pytest.raises(ValueError):
        psg_run(scalar(), None, 0.0, 1.0, 3)
