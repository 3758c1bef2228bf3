"""Synthetic composite problems with exact oracles and reference optima."""

import json
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .prox import (BoxIndicator, L1Norm, NonnegIndicator, ProxFunction,
                   gradient_mapping)

__all__ = [
    "TestProblem",
    "make_nnls",
    "make_lasso",
    "make_nonconvex_quartic",
    "reference_solve",
    "lasso_duality_gap",
    "problem_from_json",
]


@dataclass
class TestProblem:
    """``min f(x) + h(x)`` with an exact smooth oracle.

    Attributes
    ----------
    name : str
    fun : callable
        ``x -> (f(x), grad f(x))``.
    h : ProxFunction
    lipschitz_L : float or None
    f_star : float or None
        Optimal value of ``F = f + h`` (global for the quartic).
    x_star : ndarray or None
    convex : bool
    data : dict
        Arrays that define the instance, used for serialization.
    """

    __test__ = False  # not a pytest class

    name: str
    fun: Callable
    h: ProxFunction
    lipschitz_L: Optional[float] = None
    f_star: Optional[float] = None
    x_star: Optional[np.ndarray] = None
    convex: bool = True
    data: dict = field(default_factory=dict)

    @property
    def dim(self):
        return int(self.data["n"])

    def f(self, x):
        return self.fun(np.asarray(x, dtype=float))[0]

    def grad(self, x):
        return self.fun(np.asarray(x, dtype=float))[1]

    def F(self, x):
        return self.f(x) + self.h.value(x)

    def to_json(self):
        payload = {"name": self.name, "h": self.h.to_dict(),
                   "lipschitz_L": self.lipschitz_L, "f_star": self.f_star,
                   "x_star": None if self.x_star is None else self.x_star.tolist(),
                   "convex": self.convex}
        payload["data"] = {k: (v.tolist() if isinstance(v, np.ndarray) else v)
                           for k, v in self.data.items()}
        return json.dumps(payload)


class _least_squares:
    """``x -> (||Ax - b||^2 / 2, A'(Ax - b))``; a class so it pickles."""

    def __init__(self, A, b):
        self.A, self.b = A, b

    def __call__(self, x):
        r = self.A @ x - self.b
        return 0.5 * float(r @ r), self.A.T @ r


class _quartic:
    def __init__(self, tilt):
        self.tilt = tilt

    def __call__(self, x):
        q = x * x - 1.0
        return 0.25 * float(q @ q) + float(self.tilt @ x), x * q + self.tilt


def reference_solve(fun, h, x0, L=None, tol=1e-12, max_iters=200_000):
    """High-precision exact proximal gradient with Armijo backtracking.

    Sufficient decrease ``F(x+) <= F(x) - 1e-4/lam ||x+ - x||^2`` is tested
    with a rounding allowance of a few ulps of ``|f|`` so that progress does
    not stall once decreases fall below machine precision. Iterates until
    the gradient-mapping norm at stepsize 1 is at most `tol`.
    """
    x = h.prox(np.asarray(x0, dtype=float), 1.0)
    f, g = fun(x)
    lam = 1.0 if L is None else 1.0 / L
    for _ in range(max_iters):
        if gradient_mapping(h, 1.0, x, g).norm <= tol:
            break
        while True:
            xn = h.prox(x - lam * g, lam)
            d = xn - x
            fn, gn = fun(xn)
            slack = 8.0 * np.finfo(float).eps * (1.0 + abs(f))
            if (fn + h.value(xn) <= f + h.value(x) - 1e-4 / lam * float(d @ d) + slack
                    or lam < 1e-14):
                break
            lam *= 0.5
        s, y = d, gn - g
        sy = float(s @ y)
        x, f, g = xn, fn, gn
        lam = float(s @ s) / sy if sy > 1e-300 else 1.0
        lam = min(max(lam, 1e-10), 1e10)
    return x


def make_nnls(m, n, seed):
    """Nonnegative least squares with Gaussian data."""
    if not m >= n >= 1:
        raise ValueError("need m >= n >= 1")
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((m, n))
    b = rng.standard_normal(m)
    return _nnls_from_data(A, b, seed)


def _nnls_from_data(A, b, seed=None):
    fun = _least_squares(A, b)
    h = NonnegIndicator()
    L = float(np.linalg.norm(A.T @ A, 2))
    x_star = reference_solve(fun, h, np.zeros(A.shape[1]), L)
    return TestProblem("nnls", fun, h, L, fun(x_star)[0], x_star, True,
                       {"kind": "nnls", "A": A, "b": b, "n": A.shape[1],
                        "seed": seed})


def make_lasso(m, n, lambda_l1, seed):
    """``1/2 ||Ax - b||^2 + lambda_l1 ||x||_1`` with Gaussian data."""
    if not lambda_l1 > 0:
        raise ValueError("lambda_l1 must be positive")
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((m, n))
    b = rng.standard_normal(m)
    return _lasso_from_data(A, b, lambda_l1, seed)


def _lasso_from_data(A, b, lambda_l1, seed=None):
    fun = _least_squares(A, b)
    h = L1Norm(lambda_l1)
    L = float(np.linalg.norm(A.T @ A, 2))
    x_star = reference_solve(fun, h, np.zeros(A.shape[1]), L)
    return TestProblem("lasso", fun, h, L, fun(x_star)[0] + h.value(x_star),
                       x_star, True,
                       {"kind": "lasso", "A": A, "b": b, "n": A.shape[1],
                        "lambda_l1": float(lambda_l1), "seed": seed})


def lasso_duality_gap(A, b, lambda_l1, x):
    """Primal minus dual objective at the scaled residual dual point."""
    r = b - A @ x
    primal = 0.5 * float(r @ r) + lambda_l1 * float(np.sum(np.abs(x)))
    corr = float(np.max(np.abs(A.T @ r))) if r.size else 0.0
    u = r if corr <= lambda_l1 else r * (lambda_l1 / corr)
    dual = float(b @ u) - 0.5 * float(u @ u)
    return primal - dual


def _scalar_quartic_min(t, lo=-2.0, hi=2.0):
    """Global minimizer of ``(s^2-1)^2/4 + t s`` on ``[lo, hi]``."""
    phi = lambda s: 0.25 * (s * s - 1.0) ** 2 + t * s
    cands = [lo, hi]
    for r in np.roots([1.0, 0.0, -1.0, t]):
        if abs(r.imag) > 1e-6:
            continue
        s = r.real
        for _ in range(5):
            slope = 3.0 * s * s - 1.0
            if abs(slope) < 1e-8:
                break
            s -= (s ** 3 - s + t) / slope
        if lo <= s <= hi:
            cands.append(float(s))
    vals = [phi(s) for s in cands]
    k = int(np.argmin(vals))
    return cands[k], vals[k]


def make_nonconvex_quartic(n, seed, tilt_scale=0.1):
    """Separable double-well ``1/4 sum (x_j^2 - 1)^2 + <tilt, x>`` on ``[-2, 2]^n``.

    The second derivative ``3 x_j^2 - 1`` lies in ``[-1, 11]`` on the box, so
    ``L = 11``. The global optimum is found coordinatewise.
    """
    if n < 1:
        raise ValueError("need n >= 1")
    rng = np.random.default_rng(seed)
    tilt = tilt_scale * rng.uniform(-1.0, 1.0, n)
    return _quartic_from_data(tilt, seed)


def _quartic_from_data(tilt, seed=None):
    n = tilt.size
    h = BoxIndicator(-2.0 * np.ones(n), 2.0 * np.ones(n))
    mins = [_scalar_quartic_min(t) for t in tilt]
    x_star = np.array([s for s, _ in mins])
    f_star = float(sum(v for _, v in mins))
    return TestProblem("quartic", _quartic(tilt), h, 11.0, f_star, x_star, False,
                       {"kind": "quartic", "tilt": tilt, "n": n, "seed": seed})


def problem_from_json(text):
    """Rebuild a problem serialized with :meth:`TestProblem.to_json`."""
    d = json.loads(text)
    data = d["data"]
    kind = data["kind"]
    if kind == "nnls":
        return _nnls_from_data(np.array(data["A"]), np.array(data["b"]), data["seed"])
    if kind == "lasso":
        return _lasso_from_data(np.array(data["A"]), np.array(data["b"]),
                                data["lambda_l1"], data["seed"])
    if kind == "quartic":
        return _quartic_from_data(np.array(data["tilt"]), data["seed"])
    raise ValueError(f"unknown problem kind {kind!r}")
