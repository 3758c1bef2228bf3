"""Fixed-point mappings of the dual beamforming subproblem.

For a multiplier vector ``x >= 0`` let

    C(beta, x) = I + sum_k beta_k h_k h_k^H + Diag(x).

The dual variables solve ``beta = I_x(beta)`` with

    I_x(beta)_k = gamma_k / (gamma_k + 1) / (h_k^H C^{-1} h_k),

and the powers solve ``p = J(p)``, where ``J`` is affine in ``p`` and built
from the receive beamformers ``u_k = C^{-1} h_k / ||C^{-1} h_k||``. Both
iterations contract in Thompson's metric on feasible instances.
"""

from typing import NamedTuple

import numpy as np
from scipy.linalg import cholesky, solve_triangular

__all__ = [
    "FpDivergence",
    "FpResult",
    "thompson_metric",
    "mapping_I",
    "mapping_J",
    "beamformer_u",
    "beamformers",
    "affine_J",
    "solve_fp_stage1",
    "solve_fp_stage2",
    "POSITIVITY_FLOOR",
]

POSITIVITY_FLOOR = 1e-300
# beta beyond this multiple of (1 + max x) means the SINR targets cannot be met
DIVERGENCE_BOUND = 1e15


class FpDivergence(RuntimeError):
    """A fixed-point iteration did not reach its tolerance."""


class FpResult(NamedTuple):
    value: np.ndarray
    iters: int
    residual: float


def thompson_metric(p, q):
    """``max_k |ln p_k - ln q_k|`` for strictly positive vectors."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError("vectors must have the same length")
    if np.any(p <= 0) or np.any(q <= 0):
        raise ValueError("Thompson metric needs strictly positive vectors")
    if p.size == 0:
        return 0.0
    return float(np.max(np.abs(np.log(p) - np.log(q))))


def _check_x(instance, x):
    x = np.asarray(x, dtype=float)
    if x.shape != (instance.M,):
        raise ValueError(f"multiplier must have length M={instance.M}")
    if np.any(x < 0):
        raise ValueError("multiplier must be nonnegative")
    return x


def _check_beta(instance, beta):
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (instance.K,):
        raise ValueError(f"beta must have length K={instance.K}")
    if np.any(beta < 0) or not np.all(np.isfinite(beta)):
        raise ValueError("beta must be finite and nonnegative")
    return beta


def _chol(instance, x, beta):
    """Lower Cholesky factor of ``C(beta, x)``."""
    H = instance.channels
    C = (H.T * beta) @ H.conj()
    C[np.diag_indices_from(C)] += 1.0 + x
    if not instance.capacity.is_zero:
        C[np.diag_indices_from(C)] += instance.capacity.lambda_diag(beta, x)
    return cholesky(C, lower=True, check_finite=False)


def _whitened(instance, x, beta):
    Lc = _chol(instance, x, beta)
    W = solve_triangular(Lc, instance.channels.T, lower=True, check_finite=False)
    return Lc, W


def _apply_I(instance, x, beta):
    _, W = _whitened(instance, x, beta)
    q = np.einsum("mk,mk->k", W.conj(), W).real
    g = instance.gamma_bar
    return g / (g + 1.0) / q


def mapping_I(instance, x, beta):
    """Evaluate ``I_x(beta)``."""
    x = _check_x(instance, x)
    beta = _check_beta(instance, beta)
    return _apply_I(instance, x, beta)


def _unnormalized_u(instance, x, beta):
    Lc, W = _whitened(instance, x, beta)
    return solve_triangular(Lc.conj().T, W, lower=False, check_finite=False)


def beamformers(instance, x, beta):
    """All receive beamformers as the columns of an ``M x K`` matrix."""
    x = _check_x(instance, x)
    beta = _check_beta(instance, beta)
    Z = _unnormalized_u(instance, x, beta)
    norms = np.linalg.norm(Z, axis=0)
    if np.any(norms == 0):
        raise ValueError("degenerate channel: C^{-1} h_k vanished")
    U = Z / norms
    # fix the phase so that u is real positive when M = 1
    if instance.M == 1:
        U = np.abs(U).astype(complex)
    return U


def beamformer_u(instance, x, beta, k):
    """Unit-norm receive beamformer of user `k`."""
    return beamformers(instance, x, beta)[:, k]


def affine_J(instance, x, beta):
    """Return ``(T, c)`` with ``J(p) = T p + c``."""
    U = beamformers(instance, x, beta)
    G = np.abs(instance.channels.conj() @ U) ** 2  # G[k, j] = |h_k^H u_j|^2
    direct = np.diag(G).copy()
    if np.any(direct <= 0):
        raise ValueError("degenerate channel: h_k^H u_k = 0")
    cross = G.copy()
    np.fill_diagonal(cross, 0.0)
    if not instance.capacity.is_zero:
        A = instance.capacity.a_matrices(beta, x)
        if A is not None:
            H = instance.channels
            for j, Aj in enumerate(A):
                cross[:, j] += np.einsum("km,mn,kn->k", H.conj(), Aj, H).real
    scale = instance.gamma_bar / direct
    return scale[:, None] * cross, scale * instance.sigma2


def mapping_J(instance, x, beta, p):
    """Evaluate ``J_{beta,x}(p)``."""
    p = np.asarray(p, dtype=float)
    if p.shape != (instance.K,):
        raise ValueError(f"p must have length K={instance.K}")
    T, c = affine_J(instance, x, beta)
    return T @ p + c


def solve_fp_stage1(instance, x, beta0, res1, cap=50_000):
    """Iterate ``beta <- I_x(beta)`` until the Thompson step is ``<= res1``.

    Returns
    -------
    FpResult
        ``(beta_tilde, iters, residual)`` where ``beta_tilde`` is the last
        iterate and ``residual`` the Thompson distance of the last step.

    Raises
    ------
    FpDivergence
        If `cap` iterations do not suffice or the iterates blow up, which
        happens when the SINR targets are infeasible.
    """
    x = _check_x(instance, x)
    beta = np.maximum(_check_beta(instance, beta0), POSITIVITY_FLOOR)
    log_b = np.log(beta)
    bound = DIVERGENCE_BOUND * (1.0 + float(np.max(x, initial=0.0)))
    for it in range(1, cap + 1):
        nxt = np.maximum(_apply_I(instance, x, beta), POSITIVITY_FLOOR)
        log_n = np.log(nxt)
        r = float(np.max(np.abs(log_n - log_b)))
        if r <= res1:
            return FpResult(nxt, it, r)
        if nxt.max() > bound:
            raise FpDivergence(f"stage-1 iterates exceed {bound:g} "
                               f"after {it} steps; SINR targets look infeasible")
        beta, log_b = nxt, log_n
    raise FpDivergence(f"stage-1 residual {r:.3g} above {res1:.3g} after {cap} steps")


def solve_fp_stage2(instance, x, beta_tilde, p0, res2, cap=50_000, affine=None):
    """Iterate ``p <- J_{beta,x}(p)`` until the Thompson step is ``<= res2``.

    `affine` may carry a precomputed ``(T, c)`` pair for this ``(beta, x)``.
    """
    x = _check_x(instance, x)
    T, c = affine if affine is not None else affine_J(instance, x, beta_tilde)
    p = np.maximum(np.asarray(p0, dtype=float), POSITIVITY_FLOOR)
    log_p = np.log(p)
    for it in range(1, cap + 1):
        nxt = np.maximum(T @ p + c, POSITIVITY_FLOOR)
        log_n = np.log(nxt)
        r = float(np.max(np.abs(log_n - log_p)))
        if r <= res2:
            return FpResult(nxt, it, r)
        if nxt.max() > DIVERGENCE_BOUND:
            raise FpDivergence("stage-2 iterates blew up")
        p, log_p = nxt, log_n
    raise FpDivergence(f"stage-2 residual {r:.3g} above {res2:.3g} after {cap} steps")
