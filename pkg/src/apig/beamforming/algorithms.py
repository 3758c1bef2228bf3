"""Dual ascent solvers for the beamforming dual problem.

``apig_fp_run`` applies the adaptive proximal inexact gradient method to
``min_{x >= 0} -d(x)``, where every value and gradient of ``d`` comes from
the two fixed-point stages solved to a tolerance ``res`` that is tied to the
error schedule. ``psg_run`` is the projected subgradient baseline.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from ..oracle import ConstantSequence, PowerSequence
from ..solver import (ApigResult, IterationRecord, Status, abb_stepsize,
                      default_ls_cap, initial_trial_stepsize, upsilon1)
from .dual import dual_gradient_tilde, dual_value_tilde, evaluate_dual
from .fixed_point import affine_J, solve_fp_stage1, solve_fp_stage2

__all__ = [
    "ApigFpConfig",
    "apig_fp_a",
    "apig_fp_r",
    "pg_baseline",
    "reference_config",
    "apig_fp_run",
    "PsgTrace",
    "psg_run",
]

log = logging.getLogger(__name__)


@dataclass
class ApigFpConfig:
    """Parameters of the fixed-point driven method.

    Attributes
    ----------
    theta, alpha, lambda_min, lambda_max, lambda0, epsilon, max_outer_iters
        As for :class:`apig.solver.ApigConfig`.
    b_tilde : float
        Relative tolerance factor; ``res`` scales with the step length.
    eta_g_tilde, eta_f_tilde : callable
        Absolute tolerance schedules.
    varrho : float
        Growth factor of the error constants after a failed trial.
    c0, c0_tilde : float
        Initial guesses of the error constants at the base and trial points.
    fp_max_iters : int
        Iteration cap per fixed-point stage.
    termination : {"achieved", "budget"}
        Error term used by the stopping test. ``"budget"`` uses the requested
        tolerance ``sqrt(eta_g^2 + b^2 ||x^{i+1} - x^i||^2)``; ``"achieved"``
        uses the residual the fixed-point stages actually reached at
        ``x^i``, which never exceeds the requested one.
    res_floor : float
        Smallest tolerance ever requested from the fixed-point stages.
    max_x_norm : float, optional
        Stop with status ``Diverged`` once ``||x^i||`` exceeds this value.
        Multipliers grow without bound when the power budgets cannot be met.
    """

    theta: float = 1e-4
    alpha: float = 0.25
    lambda_min: float = 1e-10
    lambda_max: float = 1e10
    lambda0: float = 1.0
    epsilon: float = 1e-6
    b_tilde: float = 0.0
    eta_g_tilde: object = field(default_factory=lambda: PowerSequence.from_deltas(2, 1.2))
    eta_f_tilde: object = field(default_factory=lambda: PowerSequence.from_deltas(2, 1.2))
    varrho: float = 1.1
    c0: float = 100.0
    c0_tilde: float = 100.0
    fp_max_iters: int = 50_000
    max_outer_iters: int = 5_000
    ls_cap: int = None
    termination: str = "achieved"
    res_floor: float = 1e-14
    max_res_refinements: int = 60
    max_x_norm: float = None
    name: str = "APIG-FP"

    def __post_init__(self):
        if not 0.0 < self.theta < 1.0:
            raise ValueError("theta must lie in (0, 1)")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if not 0.0 < self.lambda_min < self.lambda_max:
            raise ValueError("need 0 < lambda_min < lambda_max")
        if not self.lambda_min <= self.lambda0 <= self.lambda_max:
            raise ValueError("lambda0 must lie in [lambda_min, lambda_max]")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not self.varrho > 1.0:
            raise ValueError("varrho must exceed 1")
        if not (self.c0 > 0 and self.c0_tilde > 0):
            raise ValueError("initial error constants must be positive")
        if self.b_tilde < 0:
            raise ValueError("b_tilde must be nonnegative")
        if self.termination not in ("achieved", "budget"):
            raise ValueError("termination must be 'achieved' or 'budget'")
        if self.ls_cap is None:
            self.ls_cap = default_ls_cap(self.alpha, self.lambda_min, self.lambda_max)


def apig_fp_a(delta1=2.0, delta2=1.2, **kw):
    """Absolute-error variant: ``b = 0`` and ``eta_g = eta_f``."""
    seq = PowerSequence.from_deltas(delta1, delta2)
    kw.setdefault("name", "APIG-FP-A")
    return ApigFpConfig(b_tilde=0.0, eta_g_tilde=seq, eta_f_tilde=seq, **kw)


def apig_fp_r(delta1=1.0, delta2=1.2, delta3=1.0, **kw):
    """Relative-error variant: ``b = 10**-delta3`` and ``eta_g = 0``."""
    kw.setdefault("name", "APIG-FP-R")
    return ApigFpConfig(b_tilde=10.0 ** (-delta3), eta_g_tilde=ConstantSequence(0.0),
                        eta_f_tilde=PowerSequence.from_deltas(delta1, delta2), **kw)


def pg_baseline(precision=1e-10, **kw):
    """Near-exact proximal gradient: constant tight fixed-point tolerance."""
    seq = ConstantSequence(precision)
    kw.setdefault("name", "PG")
    return ApigFpConfig(b_tilde=0.0, eta_g_tilde=seq, eta_f_tilde=seq, **kw)


def reference_config(precision=1e-13, epsilon=1e-9, **kw):
    """High-precision run used as ground truth."""
    kw.setdefault("name", "reference")
    kw.setdefault("termination", "budget")
    kw.setdefault("max_outer_iters", 20_000)
    kw.setdefault("max_x_norm", 1e6)
    return pg_baseline(precision, epsilon=epsilon, **kw)


class _FixedPointOracle:
    """Warm-started fixed-point evaluations of ``f = -d`` and its gradient."""

    def __init__(self, instance, cap):
        self.instance = instance
        self.cap = cap
        self.beta = np.ones(instance.K)
        self.p = np.ones(instance.K)

    def base(self, x, res):
        inst = self.instance
        s1 = solve_fp_stage1(inst, x, self.beta, res / 2, self.cap)
        aff = affine_J(inst, x, s1.value)
        s2 = solve_fp_stage2(inst, x, s1.value, self.p, res / 2, self.cap, affine=aff)
        self.beta, self.p = s1.value, s2.value
        f = -dual_value_tilde(inst, s1.value, x)
        g = -dual_gradient_tilde(inst, s1.value, s2.value, x)
        return f, g, s1.residual + s2.residual, s1.iters + s2.iters

    def trial(self, x, res):
        s1 = solve_fp_stage1(self.instance, x, self.beta, res / 2, self.cap)
        return -dual_value_tilde(self.instance, s1.value, x), s1.value, s1.iters


def apig_fp_run(instance, config, x0=None):
    """Run the fixed-point driven adaptive method from `x0` (default zero).

    Returns
    -------
    ApigResult
        ``x_final`` is the multiplier returned at termination. Each trace
        record carries the error constant ``c_value`` in force when the
        trial was accepted and the fixed-point iterations spent in that
        outer iteration as ``inner_cost``. ``info`` holds the final fixed
        points, the largest iterate norm and the number of clamped
        Barzilai-Borwein steps.

    Raises
    ------
    FpDivergence
        From the fixed-point stages.
    """
    cfg = config
    x = np.zeros(instance.M) if x0 is None else np.asarray(x0, dtype=float).copy()
    if np.any(x < 0):
        raise ValueError("starting multiplier must be nonnegative")
    oracle = _FixedPointOracle(instance, cfg.fp_max_iters)
    C, Ct = cfg.c0, cfg.c0_tilde
    lam_init = cfg.lambda0
    x_prev = g_prev = None
    trace = []
    clamps = 0
    grad_evals = 0
    max_norm = float(np.linalg.norm(x))

    def info(extra=None):
        d = {"clamp_events": clamps, "max_x_norm": max_norm,
             "beta": oracle.beta.copy(), "p": oracle.p.copy(),
             "total_fp_iters": int(sum(r.inner_cost for r in trace)),
             "final_c": C, "gradient_evals": grad_evals}
        d.update(extra or {})
        return d

    for i in range(cfg.max_outer_iters):
        eta_g = cfg.eta_g_tilde(i)
        eta_f = cfg.eta_f_tilde(i)
        cost = 0
        accepted = False
        for ell in range(cfg.ls_cap + 1):
            lam = lam_init * cfg.alpha ** ell
            # res depends on the step, which depends on the gradient computed
            # with res; tighten until the achieved residual is admissible
            res = max(eta_f, cfg.res_floor)
            for _ in range(cfg.max_res_refinements):
                f_cur, g, achieved, its = oracle.base(x, res)
                cost += its
                grad_evals += 1
                x_trial = np.maximum(x - lam * g, 0.0)
                disp = float(np.linalg.norm(x_trial - x))
                res_req = max(min(math.hypot(eta_g, cfg.b_tilde * disp), eta_f),
                              cfg.res_floor)
                if achieved <= res_req:
                    break
                res = res_req
            f_trial, beta_trial, its = oracle.trial(x_trial, res_req)
            cost += its
            nu = (upsilon1(lam, 0.0, C * cfg.b_tilde) * (C * eta_g) ** 2
                  + (C + Ct) * eta_f)
            if f_trial <= f_cur - cfg.theta / lam * disp ** 2 + nu:
                accepted = True
                break
            C *= cfg.varrho
            Ct *= cfg.varrho

        if not accepted:
            log.warning("%s: line search failed at iteration %d", cfg.name, i)
            return ApigResult(x, Status.LS_FAILURE, trace, None, info())

        g_norm = disp / lam
        if cfg.termination == "budget":
            err = math.hypot(eta_g, cfg.b_tilde * disp)
        else:
            err = achieved
        delta = g_norm + C * err
        trace.append(IterationRecord(
            i=i, x=x.copy(), lam=lam, ls_trials=ell, g_mapped_norm=g_norm,
            delta_g=delta, nu=nu, f_inexact=f_cur, inner_cost=cost,
            lam_init=lam_init, gradient=g.copy(), step_norm=disp, c_value=C))
        if delta <= cfg.epsilon:
            return ApigResult(x, Status.CONVERGED, trace, x_trial, info())

        if i >= 1:
            abb = abb_stepsize(x - x_prev, g - g_prev, i, cfg.lambda_max)
            lam_init = initial_trial_stepsize(cfg, i + 1, abb)
            if lam_init != abb:
                clamps += 1
                log.debug("%s: ABB step %.3g clamped at iteration %d", cfg.name, abb, i)
        x_prev, g_prev = x, g
        x = x_trial
        oracle.beta = beta_trial
        max_norm = max(max_norm, float(np.linalg.norm(x)))
        if cfg.max_x_norm is not None and max_norm > cfg.max_x_norm:
            log.info("%s: multiplier norm %.3g exceeds limit", cfg.name, max_norm)
            return ApigResult(x, Status.DIVERGED, trace, None, info())

    return ApigResult(x, Status.MAX_ITERS, trace, None, info())


@dataclass
class PsgTrace:
    """Iterates and dual values of a projected subgradient run."""

    x: list
    dual_values: list
    fp_iters: list
    x_final: np.ndarray = None

    @property
    def best_values(self):
        return np.maximum.accumulate(np.asarray(self.dual_values))

    @property
    def best_x(self):
        return self.x[int(np.argmax(self.dual_values))]

    @property
    def total_fp_iters(self):
        return int(sum(self.fp_iters))


def psg_run(instance, x0, lambda_base, delta, max_iters, res=1e-10, cap=50_000):
    """Projected ascent ``x <- max(x + lam (i+1)^-delta grad d(x), 0)``.

    Gradients come from warm-started fixed-point solves at tolerance `res`;
    `max_iters` is the number of gradient evaluations.
    """
    if not lambda_base > 0 or not delta > 0:
        raise ValueError("lambda_base and delta must be positive")
    x = np.zeros(instance.M) if x0 is None else np.asarray(x0, dtype=float).copy()
    trace = PsgTrace([], [], [])
    beta = p = None
    for i in range(max_iters):
        ev = evaluate_dual(instance, x, res, beta, p, cap)
        beta, p = ev.beta, ev.p
        trace.x.append(x.copy())
        trace.dual_values.append(ev.value)
        trace.fp_iters.append(ev.iters)
        x = np.maximum(x + lambda_base * (i + 1.0) ** (-delta) * ev.gradient, 0.0)
    trace.x_final = x
    return trace
