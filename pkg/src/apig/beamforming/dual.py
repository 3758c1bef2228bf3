"""Inexact dual value, dual gradient and primal recovery."""

from typing import NamedTuple

import numpy as np

from .fixed_point import (affine_J, beamformers, solve_fp_stage1,
                          solve_fp_stage2)

__all__ = [
    "dual_value_tilde",
    "dual_gradient_tilde",
    "recover_primal",
    "PrimalSolution",
    "DualEvaluation",
    "evaluate_dual",
    "dual_reference",
]


def dual_value_tilde(instance, beta_tilde, x):
    """``sum_k beta_k sigma_k^2 - sum_m x_m Pbar_m``."""
    return float(np.dot(beta_tilde, instance.sigma2) - np.dot(x, instance.p_bar))


def _antenna_powers(instance, U, p):
    return (np.abs(U) ** 2) @ p


def dual_gradient_tilde(instance, beta_tilde, p_tilde, x):
    """Realized per-antenna power minus budget, at the approximate fixed points."""
    U = beamformers(instance, x, beta_tilde)
    power = _antenna_powers(instance, U, p_tilde)
    if not instance.capacity.is_zero:
        A = instance.capacity.a_matrices(beta_tilde, x)
        if A is not None:
            power = power + sum(pk * np.real(np.diag(Ak)) for pk, Ak in zip(p_tilde, A))
    return power - instance.p_bar


class PrimalSolution(NamedTuple):
    beamformers: np.ndarray  # M x K, column k is v_k
    realized_powers: np.ndarray
    sinrs: np.ndarray

    @property
    def total_power(self):
        return float(np.sum(np.abs(self.beamformers) ** 2))


def recover_primal(instance, beta_tilde, p_tilde, x):
    """Transmit beamformers ``v_k = sqrt(p_k) u_k``, antenna powers and SINRs."""
    U = beamformers(instance, x, beta_tilde)
    V = U * np.sqrt(p_tilde)
    G = np.abs(instance.channels.conj() @ V) ** 2
    signal = np.diag(G)
    interference = G.sum(axis=1) - signal
    sinr = signal / (interference + instance.sigma2)
    return PrimalSolution(V, np.sum(np.abs(V) ** 2, axis=1), sinr)


class DualEvaluation(NamedTuple):
    value: float
    gradient: np.ndarray
    beta: np.ndarray
    p: np.ndarray
    iters: int
    residual: float


def evaluate_dual(instance, x, res, beta0=None, p0=None, cap=50_000):
    """Solve both fixed-point stages to tolerance ``res / 2`` each."""
    x = np.asarray(x, dtype=float)
    ones = np.ones(instance.K)
    s1 = solve_fp_stage1(instance, x, ones if beta0 is None else beta0, res / 2, cap)
    aff = affine_J(instance, x, s1.value)
    s2 = solve_fp_stage2(instance, x, s1.value, ones if p0 is None else p0,
                         res / 2, cap, affine=aff)
    return DualEvaluation(dual_value_tilde(instance, s1.value, x),
                          dual_gradient_tilde(instance, s1.value, s2.value, x),
                          s1.value, s2.value, s1.iters + s2.iters,
                          s1.residual + s2.residual)


def dual_reference(instance, x, res=1e-13, cap=200_000):
    """High-precision dual value and gradient at `x`."""
    return evaluate_dual(instance, x, res, cap=cap)
