"""Proximal operators and gradient mappings.

Every convex term ``h`` used by the solvers is a :class:`ProxFunction`: an
object that can evaluate ``h(x)`` and the proximal map

    prox_{lam h}(x) = argmin_y  ||y - x||^2 / (2 lam) + h(y)

in closed form. Four concrete terms are provided (:class:`Zero`,
:class:`NonnegIndicator`, :class:`BoxIndicator`, :class:`L1Norm`); user code
can subclass :class:`ProxFunction` to plug in other closed-form proxes.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ProxFunction",
    "Zero",
    "NonnegIndicator",
    "BoxIndicator",
    "L1Norm",
    "GradientMappingValue",
    "prox",
    "gradient_mapping",
    "stationarity_residual",
    "as_point",
]


def as_point(x):
    """Return `x` as a 1-D float array, rejecting NaN/Inf."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        x = np.ravel(x)
    if not np.all(np.isfinite(x)):
        raise ValueError("point has non-finite entries")
    return x


def _check_lambda(lam):
    if not lam > 0 or not np.isfinite(lam):
        raise ValueError(f"stepsize must be positive and finite, got {lam!r}")


class ProxFunction:
    """Base class for a proper closed convex term with an explicit prox.

    Subclasses implement :meth:`_prox` and :meth:`value`. ``value`` returns
    ``np.inf`` outside the domain.
    """

    def _prox(self, x, lam):
        raise NotImplementedError

    def value(self, x):
        raise NotImplementedError

    def prox(self, x, lam):
        _check_lambda(lam)
        return self._prox(as_point(x), float(lam))

    def in_domain(self, x, tol=0.0):
        return bool(np.isfinite(self.value(np.asarray(x, dtype=float))))

    def to_dict(self):
        return {"kind": type(self).__name__}


class Zero(ProxFunction):
    """``h = 0``; the prox is the identity."""

    def _prox(self, x, lam):
        return x.copy()

    def value(self, x):
        return 0.0

    def __repr__(self):
        return "Zero()"


class NonnegIndicator(ProxFunction):
    """Indicator of the nonnegative orthant."""

    def _prox(self, x, lam):
        return np.maximum(x, 0.0)

    def value(self, x):
        return 0.0 if np.all(np.asarray(x) >= 0.0) else np.inf

    def __repr__(self):
        return "NonnegIndicator()"


class BoxIndicator(ProxFunction):
    """Indicator of ``{x : lower <= x <= upper}``."""

    def __init__(self, lower, upper):
        lower = np.atleast_1d(np.asarray(lower, dtype=float))
        upper = np.atleast_1d(np.asarray(upper, dtype=float))
        if lower.shape != upper.shape:
            raise ValueError("box bounds must have the same shape")
        if np.any(lower > upper):
            raise ValueError("box requires lower <= upper componentwise")
        self.lower = lower
        self.upper = upper

    def _check_dim(self, x):
        if x.shape != self.lower.shape:
            raise ValueError(
                f"dimension mismatch: point has {x.size} entries, "
                f"box has {self.lower.size}"
            )

    def _prox(self, x, lam):
        self._check_dim(x)
        return np.clip(x, self.lower, self.upper)

    def value(self, x):
        x = np.asarray(x, dtype=float)
        self._check_dim(x)
        inside = np.all(x >= self.lower) and np.all(x <= self.upper)
        return 0.0 if inside else np.inf

    def to_dict(self):
        return {"kind": "BoxIndicator", "lower": self.lower.tolist(),
                "upper": self.upper.tolist()}

    def __repr__(self):
        return f"BoxIndicator(lower={self.lower!r}, upper={self.upper!r})"


class L1Norm(ProxFunction):
    """``h(x) = weight * ||x||_1``; the prox is soft-thresholding."""

    def __init__(self, weight=1.0):
        weight = float(weight)
        if not weight >= 0.0:
            raise ValueError("l1 weight must be nonnegative")
        self.weight = weight

    def _prox(self, x, lam):
        t = lam * self.weight
        return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)

    def value(self, x):
        return self.weight * float(np.sum(np.abs(x)))

    def to_dict(self):
        return {"kind": "L1Norm", "weight": self.weight}

    def __repr__(self):
        return f"L1Norm(weight={self.weight})"


def prox_from_dict(d):
    kind = d["kind"]
    if kind == "Zero":
        return Zero()
    if kind == "NonnegIndicator":
        return NonnegIndicator()
    if kind == "BoxIndicator":
        return BoxIndicator(d["lower"], d["upper"])
    if kind == "L1Norm":
        return L1Norm(d["weight"])
    raise ValueError(f"unknown prox function kind {kind!r}")


def prox(h, lam, x):
    """Evaluate ``prox_{lam h}(x)``."""
    return h.prox(x, lam)


@dataclass(frozen=True)
class GradientMappingValue:
    """``G_lam(x, d)`` together with the prox point it was computed from."""

    value: np.ndarray
    stepsize: float
    prox_point: np.ndarray

    @property
    def norm(self):
        return float(np.linalg.norm(self.value))


def gradient_mapping(h, lam, x, d):
    """Gradient mapping ``(x - prox_{lam h}(x - lam d)) / lam``.

    Parameters
    ----------
    h : ProxFunction
    lam : float
        Positive stepsize.
    x : array_like
        Base point.
    d : array_like
        Direction, usually an (inexact) gradient at `x`.

    Returns
    -------
    GradientMappingValue
        The mapping value and the prox point ``x(lam)``; the value is
        computed from the returned prox point so both stay consistent.
    """
    _check_lambda(lam)
    x = as_point(x)
    d = as_point(d)
    if d.shape != x.shape:
        raise ValueError("direction and point dimensions differ")
    p = h.prox(x - lam * d, lam)
    return GradientMappingValue(value=(x - p) / lam, stepsize=float(lam),
                                prox_point=p)


def stationarity_residual(h, lam, x, exact_grad):
    """Norm of ``G_lam(x, grad f(x))``; zero exactly at stationary points."""
    return gradient_mapping(h, lam, x, exact_grad).norm
