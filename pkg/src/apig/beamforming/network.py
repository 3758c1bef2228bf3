"""Network instances for per-antenna power-constrained downlink beamforming."""

import json
from dataclasses import dataclass, field

import numpy as np

__all__ = ["InfiniteCapacity", "NetworkInstance", "random_instance"]


class InfiniteCapacity:
    """Capacity hook for unlimited fronthaul links.

    A finite-capacity model would return the diagonal it adds to the
    covariance matrix and the matrices ``A_k`` with ``Q = sum_k p_k A_k``.
    With infinite capacity both vanish.
    """

    is_zero = True

    def lambda_diag(self, beta, x):
        return np.zeros(np.shape(x))

    def a_matrices(self, beta, x):
        return None

    def __repr__(self):
        return "InfiniteCapacity()"


@dataclass
class NetworkInstance:
    """Channels, noise powers, SINR targets and per-antenna budgets.

    Attributes
    ----------
    channels : ndarray, shape (K, M), complex
        Row ``k`` is the channel ``h_k`` of user ``k``.
    sigma2 : ndarray, shape (K,)
    gamma_bar : ndarray, shape (K,)
    p_bar : ndarray, shape (M,)
    seed : int or None
    capacity : object
        Capacity hook, :class:`InfiniteCapacity` by default.
    """

    channels: np.ndarray
    sigma2: np.ndarray
    gamma_bar: np.ndarray
    p_bar: np.ndarray
    seed: int = None
    capacity: object = field(default_factory=InfiniteCapacity)

    def __post_init__(self):
        self.channels = np.atleast_2d(np.asarray(self.channels, dtype=complex))
        K, M = self.channels.shape
        self.sigma2 = np.broadcast_to(np.asarray(self.sigma2, dtype=float), (K,)).copy()
        self.gamma_bar = np.broadcast_to(np.asarray(self.gamma_bar, dtype=float), (K,)).copy()
        self.p_bar = np.broadcast_to(np.asarray(self.p_bar, dtype=float), (M,)).copy()
        if not np.all(np.isfinite(self.channels)):
            raise ValueError("channel entries must be finite")
        if np.any(self.sigma2 <= 0) or np.any(self.gamma_bar <= 0) or np.any(self.p_bar <= 0):
            raise ValueError("noise powers, SINR targets and budgets must be positive")
        if np.any(np.linalg.norm(self.channels, axis=1) == 0):
            raise ValueError("degenerate channel: some h_k is zero")

    @property
    def K(self):
        return self.channels.shape[0]

    @property
    def M(self):
        return self.channels.shape[1]

    def to_dict(self):
        return {
            "M": self.M,
            "K": self.K,
            "channels": [[{"re": float(z.real), "im": float(z.imag)} for z in row]
                         for row in self.channels],
            "sigma2": self.sigma2.tolist(),
            "gamma_bar": self.gamma_bar.tolist(),
            "p_bar": self.p_bar.tolist(),
            "seed": self.seed,
        }

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d):
        ch = np.array([[complex(e["re"], e["im"]) for e in row] for row in d["channels"]])
        if ch.shape != (d["K"], d["M"]):
            raise ValueError("channel array does not match declared M, K")
        return cls(ch, d["sigma2"], d["gamma_bar"], d["p_bar"], d.get("seed"))

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def random_instance(M, K, gamma_bar=3.0, p_bar=12.0, sigma2=1.0, seed=None):
    """Rayleigh-fading instance: i.i.d. CN(0, 1) channel entries."""
    rng = np.random.default_rng(seed)
    H = (rng.standard_normal((K, M)) + 1j * rng.standard_normal((K, M))) / np.sqrt(2.0)
    return NetworkInstance(H, sigma2, gamma_bar, p_bar, seed)
