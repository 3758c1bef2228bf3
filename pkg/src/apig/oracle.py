"""Inexact first-order oracles and error budgets.

A smooth term ``f`` is accessed only through an oracle returning an
approximate value ``f_i`` and an approximate gradient ``g^i``. The admissible
errors are described by an :class:`ErrorBudget`:

* gradient:  ||g^i - grad f(x^i)||^2 <= eta_g(i)^2 + (a^2/lam^2 + b^2) ||x^i(lam) - x^i||^2
* function:  |f_i - f(x)| <= eta_f(i) + c/lam ||x^i(lam) - x^i||^2

This module holds the predicates for both inequalities, seeded error
injectors that manufacture admissible noise, and two ready-made oracles.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional, Protocol

import numpy as np

from .prox import ProxFunction, as_point

__all__ = [
    "PowerSequence",
    "ConstantSequence",
    "ErrorBudget",
    "InexactEval",
    "EvalContext",
    "SmoothOracle",
    "ExactOracle",
    "NoisyOracle",
    "check_gradient_condition",
    "check_function_condition",
    "gradient_error_bound",
    "function_error_bound",
    "inject_gradient_error",
    "inject_function_error",
]


class PowerSequence:
    """``i -> scale * (i + 1) ** (-exponent)``.

    With ``scale = 10 ** -delta1`` and ``exponent = delta2`` this is the
    tolerance schedule used by the beamforming experiments.
    """

    def __init__(self, scale, exponent):
        if scale < 0:
            raise ValueError("sequence scale must be nonnegative")
        if exponent < 0:
            raise ValueError("sequence exponent must be nonnegative")
        self.scale = float(scale)
        self.exponent = float(exponent)

    @classmethod
    def from_deltas(cls, delta1, delta2):
        return cls(10.0 ** (-delta1), delta2)

    def __call__(self, i):
        return self.scale * (i + 1.0) ** (-self.exponent)

    @property
    def summable(self):
        return self.scale == 0.0 or self.exponent > 1.0

    @property
    def square_summable(self):
        return self.scale == 0.0 or self.exponent > 0.5

    def __repr__(self):
        return f"PowerSequence(scale={self.scale:g}, exponent={self.exponent:g})"


class ConstantSequence:
    """Constant schedule; summable only when the constant is zero."""

    def __init__(self, value=0.0):
        if value < 0:
            raise ValueError("sequence value must be nonnegative")
        self.value = float(value)

    def __call__(self, i):
        return self.value

    @property
    def summable(self):
        return self.value == 0.0

    square_summable = summable

    def __repr__(self):
        return f"ConstantSequence({self.value:g})"


@dataclass(frozen=True)
class ErrorBudget:
    """Error allowance for gradients and function values.

    Parameters
    ----------
    eta_g, eta_f : callable
        Index -> nonnegative tolerance. ``eta_g`` must be square summable and
        ``eta_f`` summable (declared through the sequence's ``summable`` /
        ``square_summable`` attributes).
    a, b : float
        Relative gradient constants, ``0 <= a < 1`` and ``b >= 0``.
    c : float
        Relative function constant, ``0 <= c <= theta / 4``.
    theta : float, optional
        Sufficient-decrease parameter of the line search the budget will be
        used with. Needed to validate `c`.
    """

    eta_g: Callable[[int], float] = field(default_factory=ConstantSequence)
    a: float = 0.0
    b: float = 0.0
    eta_f: Callable[[int], float] = field(default_factory=ConstantSequence)
    c: float = 0.0
    theta: Optional[float] = None

    def __post_init__(self):
        if not 0.0 <= self.a < 1.0:
            raise ValueError(f"a must lie in [0, 1), got {self.a}")
        if not self.b >= 0.0:
            raise ValueError(f"b must be nonnegative, got {self.b}")
        if not self.c >= 0.0:
            raise ValueError(f"c must be nonnegative, got {self.c}")
        if self.theta is not None:
            if not 0.0 < self.theta < 1.0:
                raise ValueError("theta must lie in (0, 1)")
            if self.c > self.theta / 4.0:
                raise ValueError(f"c={self.c} exceeds theta/4={self.theta / 4}")
        if not getattr(self.eta_g, "square_summable", False):
            raise ValueError("eta_g must be a declared square-summable sequence")
        if not getattr(self.eta_f, "summable", False):
            raise ValueError("eta_f must be a declared summable sequence")

    @classmethod
    def zero(cls, theta=None):
        return cls(theta=theta)

    @property
    def is_zero(self):
        return (self.a == 0.0 and self.b == 0.0 and self.c == 0.0
                and self.eta_g(0) == 0.0 and self.eta_f(0) == 0.0)


@dataclass
class InexactEval:
    """An approximate value / gradient pair and the work it cost."""

    f_value: float
    gradient: Optional[np.ndarray] = None
    cost: int = 0

    def __post_init__(self):
        self.f_value = float(self.f_value)
        if not np.isfinite(self.f_value):
            raise ValueError("inexact function value is not finite")
        if self.gradient is not None:
            self.gradient = np.asarray(self.gradient, dtype=float)
            if not np.all(np.isfinite(self.gradient)):
                raise ValueError("inexact gradient is not finite")


@dataclass(frozen=True)
class EvalContext:
    """Line-search context handed to an oracle.

    At the base point of iteration ``i`` the solver passes the initial trial
    stepsize (``displacement=None``, ``trial=False``). At a trial point
    ``x^i(lam)`` it passes the trial stepsize and ``||x^i(lam) - x^i||``.
    """

    lam: float
    displacement: Optional[float] = None
    trial: bool = False


class SmoothOracle(Protocol):
    def evaluate(self, x, i, context=None) -> InexactEval:
        ...


def gradient_error_bound(budget, i, lam, displacement):
    """Right-hand side of the gradient condition, as a norm (not squared)."""
    eta = budget.eta_g(i)
    rel = (budget.a / lam) ** 2 + budget.b ** 2
    return float(np.sqrt(eta * eta + rel * displacement * displacement))


def function_error_bound(budget, i, lam, displacement):
    return float(budget.eta_f(i) + budget.c / lam * displacement * displacement)


def check_gradient_condition(err, budget, i, lam, displacement):
    """True iff ``||err||^2 <= eta_g(i)^2 + (a^2/lam^2 + b^2) displacement^2``."""
    err = np.asarray(err, dtype=float)
    lhs = float(np.dot(err, err))
    eta = budget.eta_g(i)
    rhs = eta * eta + ((budget.a / lam) ** 2 + budget.b ** 2) * displacement ** 2
    return lhs <= rhs


def check_function_condition(err, budget, i, lam, displacement):
    """True iff ``|err| <= eta_f(i) + c / lam * displacement^2``."""
    return abs(err) <= budget.eta_f(i) + budget.c / lam * displacement ** 2


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _unit_direction(rng, n):
    v = rng.standard_normal(n)
    nv = np.linalg.norm(v)
    if nv == 0.0:
        v = np.zeros(n)
        v[0] = 1.0
        return v
    return v / nv


def inject_gradient_error(exact_grad, budget, i, h, lam, x, rng_seed,
                          fraction=None, max_halvings=60):
    """Perturb an exact gradient by an error admissible under `budget`.

    The error points along a uniformly random direction. Its initial size is
    a uniform fraction of the bound obtained with the exact-gradient
    displacement; it is then halved until the gradient condition holds at
    the displacement produced by the perturbed gradient itself.

    Parameters
    ----------
    exact_grad : array_like
    budget : ErrorBudget
    i : int
        Iteration index.
    h : ProxFunction
    lam : float or sequence of float
        Stepsize(s) at which the condition must hold. Passing the whole
        backtracking ladder certifies the error for every trial stepsize.
    x : array_like
        Base point.
    rng_seed : int or numpy.random.Generator
    fraction : float, optional
        Fixed fraction of the bound in ``[0, 1]``; random when omitted.

    Returns
    -------
    noisy_grad : ndarray
    certified : bool
        Always True: if no admissible nonzero error is found the exact
        gradient is returned, which satisfies the condition trivially.
    """
    g = as_point(exact_grad)
    x = as_point(x)
    lams = np.atleast_1d(np.asarray(lam, dtype=float))
    rng = _rng(rng_seed)
    direction = _unit_direction(rng, g.size)
    if fraction is None:
        fraction = rng.uniform()
    lam0 = float(lams[0])
    disp0 = np.linalg.norm(h.prox(x - lam0 * g, lam0) - x)
    bound = gradient_error_bound(budget, i, lam0, disp0)
    magnitude = fraction * bound
    if magnitude == 0.0:
        return g.copy(), True

    for _ in range(max_halvings + 1):
        noisy = g + magnitude * direction
        err = noisy - g
        ok = True
        for lm in lams:
            disp = np.linalg.norm(h.prox(x - lm * noisy, lm) - x)
            if not check_gradient_condition(err, budget, i, lm, disp):
                ok = False
                break
        if ok:
            return noisy, True
        magnitude *= 0.5
    return g.copy(), True


def inject_function_error(exact_f, budget, i, lam, displacement, rng_seed,
                          fraction=None):
    """Return ``exact_f + e`` with ``|e|`` a fraction of the admissible bound.

    With ``lam=None`` only the absolute part ``eta_f(i)`` is used, which is
    admissible for every stepsize.
    """
    rng = _rng(rng_seed)
    if fraction is None:
        fraction = rng.uniform()
    sign = 1.0 if rng.uniform() < 0.5 else -1.0
    if lam is None or displacement is None:
        bound = budget.eta_f(i)
    else:
        bound = function_error_bound(budget, i, lam, displacement)
    return float(exact_f) + sign * fraction * bound


class ExactOracle:
    """Wraps ``fun(x) -> (f, grad)``; returns exact values."""

    def __init__(self, fun):
        self.fun = fun

    def evaluate(self, x, i, context=None):
        f, g = self.fun(x)
        if context is not None and context.trial:
            return InexactEval(f)
        return InexactEval(f, g)


class NoisyOracle:
    """Exact oracle plus seeded noise that honors an :class:`ErrorBudget`.

    Gradient noise is certified at every stepsize of the backtracking ladder
    ``lam0 * alpha**l`` down to `lam_floor`, so the gradient condition holds
    at whatever trial stepsize the line search accepts. The function error
    at the base point uses only the absolute allowance; at trial points the
    full allowance for the trial stepsize is used.

    Parameters
    ----------
    fun : callable
        ``x -> (f, grad)`` exact evaluator.
    h : ProxFunction
    budget : ErrorBudget
    seed : int
    alpha : float
        Backtracking ratio of the solver.
    lam_floor : float
        Smallest stepsize the solver is expected to try.
    saturate : bool
        Draw errors at the full admissible size instead of a random fraction.
    """

    def __init__(self, fun, h: ProxFunction, budget: ErrorBudget, seed=0,
                 alpha=0.5, lam_floor=1e-6, saturate=False, max_ladder=64):
        self.fun = fun
        self.h = h
        self.budget = budget
        self.seed = int(seed)
        self.alpha = float(alpha)
        self.lam_floor = float(lam_floor)
        self.saturate = saturate
        self.max_ladder = max_ladder

    def _ladder(self, lam0):
        lams = [lam0]
        while lams[-1] * self.alpha >= self.lam_floor and len(lams) < self.max_ladder:
            lams.append(lams[-1] * self.alpha)
        return np.array(lams)

    def _generator(self, i, context):
        if context is None:
            key = [self.seed, int(i), 0]
        else:
            lam_bits = int(np.float64(context.lam).view(np.int64))
            key = [self.seed, int(i), 1 + int(context.trial), lam_bits]
        return np.random.default_rng(key)

    def evaluate(self, x, i, context=None):
        x = as_point(x)
        f, g = self.fun(x)
        rng = self._generator(i, context)
        frac = 1.0 if self.saturate else None
        if context is not None and context.trial:
            fv = inject_function_error(f, self.budget, i, context.lam,
                                       context.displacement, rng, fraction=frac)
            return InexactEval(fv)
        fv = inject_function_error(f, self.budget, i, None, None, rng,
                                   fraction=frac)
        lam0 = 1.0 if context is None else context.lam
        noisy, _ = inject_gradient_error(g, self.budget, i, self.h,
                                         self._ladder(lam0), x, rng,
                                         fraction=frac)
        return InexactEval(fv, noisy)
