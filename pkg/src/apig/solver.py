"""Adaptive proximal inexact gradient method.

Minimizes ``F = f + h`` where ``f`` is smooth and only available through an
inexact oracle and ``h`` has a closed-form prox. Each iteration

1. queries ``(f_i, g^i)`` at ``x^i``,
2. backtracks ``lam = lam0 * alpha**l`` until a relaxed sufficient-decrease
   test (``B1``) or a relaxed quadratic upper-bound test (``B2``) holds,
3. accepts ``x^{i+1} = prox_{lam h}(x^i - lam g^i)``,
4. stops when the error-aware stationarity measure ``delta_g`` is below
   ``epsilon``, returning ``x^i``,
5. seeds the next trial stepsize with an alternating Barzilai-Borwein step.
"""

import csv
import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .oracle import ErrorBudget, EvalContext
from .prox import gradient_mapping, as_point

__all__ = [
    "Status",
    "ApigConfig",
    "IterationRecord",
    "ApigResult",
    "upsilon1",
    "relaxation_nu",
    "check_ls_b1",
    "check_ls_b2",
    "abb_stepsize",
    "initial_trial_stepsize",
    "termination_delta",
    "stepsize_upper_bound",
    "stepsize_floor",
    "default_ls_cap",
    "run",
    "write_trace_csv",
]

log = logging.getLogger(__name__)


class Status(str, enum.Enum):
    CONVERGED = "Converged"
    MAX_ITERS = "MaxIters"
    LS_FAILURE = "LsFailure"
    DIVERGED = "Diverged"

    def __str__(self):
        return self.value


def default_ls_cap(alpha, lambda_min, lambda_max):
    """``ceil(log_alpha(lambda_min / lambda_max)) + 80``."""
    return int(math.ceil(math.log(lambda_min / lambda_max) / math.log(alpha))) + 80


@dataclass
class ApigConfig:
    """Parameters of the adaptive proximal inexact gradient method.

    Attributes
    ----------
    theta : float
        Sufficient-decrease parameter in (0, 1).
    alpha : float
        Backtracking ratio in (0, 1).
    lambda_min, lambda_max : float
        Clamp interval of the Barzilai-Borwein trial stepsize.
    lambda0 : float
        Trial stepsize of the first two iterations.
    epsilon : float
        Termination tolerance.
    ls_variant : {"B1", "B2"}
    budget : ErrorBudget
        Error allowance the oracle is assumed to honor.
    max_outer_iters : int
    ls_cap : int, optional
        Maximum number of backtracking reductions per iteration.
    """

    theta: float = 1e-4
    alpha: float = 0.5
    lambda_min: float = 1e-10
    lambda_max: float = 1e10
    lambda0: float = 1.0
    epsilon: float = 1e-6
    ls_variant: str = "B1"
    budget: ErrorBudget = field(default_factory=ErrorBudget)
    max_outer_iters: int = 10_000
    ls_cap: int = None

    def __post_init__(self):
        if not 0.0 < self.theta < 1.0:
            raise ValueError("theta must lie in (0, 1)")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if not 0.0 < self.lambda_min < self.lambda_max:
            raise ValueError("need 0 < lambda_min < lambda_max")
        if not self.lambda_min <= self.lambda0 <= self.lambda_max:
            raise ValueError("lambda0 must lie in [lambda_min, lambda_max]")
        if not self.epsilon > 0.0:
            raise ValueError("epsilon must be positive")
        if self.ls_variant not in ("B1", "B2"):
            raise ValueError("ls_variant must be 'B1' or 'B2'")
        if self.max_outer_iters < 1:
            raise ValueError("max_outer_iters must be positive")
        a, c = self.budget.a, self.budget.c
        if c > self.theta / 4.0:
            raise ValueError(f"c={c} exceeds theta/4={self.theta / 4}")
        if self.ls_variant == "B1":
            if not a < 1.0 - 2.0 * c - self.theta:
                raise ValueError("B1 needs a < 1 - 2c - theta")
        else:
            # B2 implies B1 with theta = 1/2, so the same bound applies there.
            if not a < 0.5 - 2.0 * c:
                raise ValueError("B2 needs a < 1/2 - 2c")
        if self.ls_cap is None:
            self.ls_cap = default_ls_cap(self.alpha, self.lambda_min,
                                         self.lambda_max)

    @property
    def effective_theta(self):
        """Decrease constant actually guaranteed by the chosen test."""
        return self.theta if self.ls_variant == "B1" else 0.5


@dataclass
class IterationRecord:
    i: int
    x: np.ndarray
    lam: float
    ls_trials: int
    g_mapped_norm: float
    delta_g: float
    nu: float
    f_inexact: float
    inner_cost: int = 0
    lam_init: float = float("nan")
    gradient: np.ndarray = None
    step_norm: float = float("nan")
    c_value: float = None


@dataclass
class ApigResult:
    x_final: np.ndarray
    status: Status
    trace: list
    x_next: np.ndarray = None
    info: dict = field(default_factory=dict)

    @property
    def n_iter(self):
        return len(self.trace)

    @property
    def converged(self):
        return self.status is Status.CONVERGED

    @property
    def total_inner_cost(self):
        return int(sum(r.inner_cost for r in self.trace))


def upsilon1(lam, a, b):
    """Weight of the squared absolute gradient error in the relaxation term."""
    if a == 0.0 and b == 0.0:
        return 0.5
    t1 = lam / (2.0 * a) if a > 0.0 else math.inf
    t2 = 1.0 / (2.0 * b) if b > 0.0 else math.inf
    return min(t1, t2)


def relaxation_nu(lam, budget, i):
    eta_g = budget.eta_g(i)
    return upsilon1(lam, budget.a, budget.b) * eta_g * eta_g + 2.0 * budget.eta_f(i)


def check_ls_b1(f_trial, h_trial, f_cur, h_cur, displacement, lam, theta, nu):
    """Relaxed sufficient decrease on ``f_i + h``."""
    return f_trial + h_trial <= f_cur + h_cur - theta / lam * displacement ** 2 + nu


def check_ls_b2(f_trial, f_cur, g, step, lam, nu):
    """Relaxed quadratic upper bound on ``f_i``."""
    step = np.asarray(step, dtype=float)
    rhs = f_cur + float(np.dot(g, step)) + float(np.dot(step, step)) / (2.0 * lam) + nu
    return f_trial <= rhs


def abb_stepsize(s, y, i, lambda_max=1e10):
    """Alternating Barzilai-Borwein stepsize.

    Even `i` uses ``||s||^2 / |s'y|``, odd `i` uses ``|s'y| / ||y||^2``. A
    denominator below 1e-300 returns `lambda_max`.
    """
    s = np.asarray(s, dtype=float)
    y = np.asarray(y, dtype=float)
    sy = abs(float(np.dot(s, y)))
    if i % 2 == 0:
        if sy < 1e-300:
            return float(lambda_max)
        return float(np.dot(s, s)) / sy
    yy = float(np.dot(y, y))
    if yy < 1e-300:
        return float(lambda_max)
    return sy / yy


def initial_trial_stepsize(config, i, abb=None):
    """Trial stepsize of iteration `i` from the previous ABB value."""
    if i < 2 or abb is None:
        return config.lambda0
    return min(max(abb, config.lambda_min), config.lambda_max)


def termination_delta(g_mapped_norm, budget, i, lam, displacement):
    eta = budget.eta_g(i)
    rel = (budget.a / lam) ** 2 + budget.b ** 2
    return g_mapped_norm + math.sqrt(eta * eta + rel * displacement ** 2)


def stepsize_upper_bound(theta, a, b, c, L):
    """Stepsize below which the line-search test is guaranteed to pass."""
    return 2.0 * (1.0 - theta - a - 2.0 * c) / (L + 2.0 * b + 1.0)


def stepsize_floor(config, L):
    """Smallest stepsize the line search can accept for an L-smooth ``f``."""
    bud = config.budget
    lam_bar = stepsize_upper_bound(config.effective_theta, bud.a, bud.b, bud.c, L)
    return min(config.lambda_min, config.alpha * lam_bar)


def _project_start(h, x0):
    if np.isfinite(h.value(x0)):
        return x0
    log.debug("starting point outside dom(h); projecting")
    return h.prox(x0, 1e-12)


def run(oracle, h, config, x0):
    """Run the method from `x0`.

    Parameters
    ----------
    oracle : SmoothOracle
        ``evaluate(x, i, context)`` returning an :class:`InexactEval`.
    h : ProxFunction
    config : ApigConfig
    x0 : array_like

    Returns
    -------
    ApigResult
        On convergence ``x_final`` is ``x^i`` of the terminating iteration,
        and ``x_next`` the prox point computed there.
    """
    x = _project_start(h, as_point(x0).copy())
    budget = config.budget
    theta = config.theta
    trace = []
    lam_init = config.lambda0
    x_prev = g_prev = None
    h_cur = h.value(x)
    clamps = 0

    for i in range(config.max_outer_iters):
        base = oracle.evaluate(x, i, EvalContext(lam=lam_init))
        f_cur, g = base.f_value, base.gradient
        cost = base.cost

        accepted = False
        lam = lam_init
        for ell in range(config.ls_cap + 1):
            lam = lam_init * config.alpha ** ell
            gm = gradient_mapping(h, lam, x, g)
            x_trial = gm.prox_point
            step = x_trial - x
            disp = float(np.linalg.norm(step))
            nu = relaxation_nu(lam, budget, i)
            trial = oracle.evaluate(x_trial, i,
                                    EvalContext(lam=lam, displacement=disp, trial=True))
            cost += trial.cost
            f_trial = trial.f_value
            if config.ls_variant == "B1":
                ok = check_ls_b1(f_trial, h.value(x_trial), f_cur, h_cur, disp,
                                 lam, theta, nu)
            else:
                ok = check_ls_b2(f_trial, f_cur, g, step, lam, nu)
            if ok:
                accepted = True
                break

        if not accepted:
            log.warning("line search failed at iteration %d", i)
            return ApigResult(x, Status.LS_FAILURE, trace, None,
                              {"clamp_events": clamps})

        delta = termination_delta(gm.norm, budget, i, lam, disp)
        trace.append(IterationRecord(
            i=i, x=x.copy(), lam=lam, ls_trials=ell, g_mapped_norm=gm.norm,
            delta_g=delta, nu=nu, f_inexact=f_cur, inner_cost=cost,
            lam_init=lam_init, gradient=g.copy(), step_norm=disp))
        if delta <= config.epsilon:
            return ApigResult(x, Status.CONVERGED, trace, x_trial,
                              {"clamp_events": clamps})

        if i >= 1:
            abb = abb_stepsize(x - x_prev, g - g_prev, i, config.lambda_max)
            lam_init = initial_trial_stepsize(config, i + 1, abb)
            clamps += lam_init != abb
        else:
            lam_init = config.lambda0
        x_prev, g_prev = x, g
        x = x_trial
        h_cur = h.value(x)

    return ApigResult(x, Status.MAX_ITERS, trace, None, {"clamp_events": clamps})


TRACE_COLUMNS = ["i", "lambda", "ls_trials", "g_mapped_norm", "delta_g", "nu",
                 "f_inexact", "inner_cost"]


def write_trace_csv(trace, path):
    """Write iteration records to `path` as CSV."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_COLUMNS)
        for r in trace:
            w.writerow([r.i, repr(r.lam), r.ls_trials, repr(r.g_mapped_norm),
                        repr(r.delta_g), repr(r.nu), repr(r.f_inexact), r.inner_cost])
