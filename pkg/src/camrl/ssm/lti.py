"""Linear time-invariant SSMs with diagonal state matrix, single input channel.

Continuous system ``x' = A x + B u, y = C x + D u``; after discretisation the
same system can be run as a recurrence or as a causal convolution with kernel
``K[i] = C A_bar^i B_bar``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class LTISSMParams:
    A: np.ndarray  # (N,) diagonal
    B: np.ndarray  # (N,)
    C: np.ndarray  # (N,)
    D: float
    dt: float

    def __post_init__(self):
        self.A = np.asarray(self.A, dtype=np.float64).reshape(-1)
        self.B = np.asarray(self.B, dtype=np.float64).reshape(-1)
        self.C = np.asarray(self.C, dtype=np.float64).reshape(-1)
        if self.A.size < 1:
            raise ValueError("state size N must be >= 1")
        if not (self.A.shape == self.B.shape == self.C.shape):
            raise ValueError("A, B, C must share the state size")
        if np.any(self.A >= 0):
            raise ValueError("diagonal of A must be strictly negative")
        if not self.dt > 0:
            raise ValueError("dt must be > 0")

    def discretize(self) -> "DiscreteSSMParams":
        return discretize_zoh(self.A, self.B, self.dt, C=self.C, D=self.D)


@dataclass
class DiscreteSSMParams:
    A_bar: np.ndarray
    B_bar: np.ndarray
    C: np.ndarray
    D: float = 0.0

    def __post_init__(self):
        self.A_bar = np.atleast_1d(np.asarray(self.A_bar, dtype=np.float64))
        self.B_bar = np.atleast_1d(np.asarray(self.B_bar, dtype=np.float64))
        self.C = np.atleast_1d(np.asarray(self.C, dtype=np.float64))


def discretize_zoh(A, B, dt: float, C=None, D: float = 0.0) -> DiscreteSSMParams:
    """Zero-order hold for a diagonal ``A``; ``a == 0`` uses the limit ``B_bar = dt * b``."""
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    a = np.atleast_1d(np.asarray(A, dtype=np.float64))
    b = np.atleast_1d(np.asarray(B, dtype=np.float64))
    if np.any(a > 0):
        raise ValueError("diagonal of A must be <= 0")
    z = dt * a
    A_bar = np.exp(z)
    # (exp(z) - 1) / a == dt * expm1(z) / z, with the z -> 0 limit equal to dt
    safe = np.where(z == 0.0, 1.0, z)
    factor = np.where(z == 0.0, dt, dt * np.expm1(z) / safe)
    B_bar = factor * b
    if np.any(np.abs(A_bar[a < 0]) >= 1.0) or np.any(np.abs(A_bar) > 1.0):
        raise ArithmeticError("discretisation produced an unstable A_bar")
    C = np.ones_like(a) if C is None else C
    return DiscreteSSMParams(A_bar, B_bar, C, D)


def ssm_recurrent(p: DiscreteSSMParams, u) -> np.ndarray:
    u = np.asarray(u, dtype=np.float64).reshape(-1)
    x = np.zeros_like(p.A_bar)
    y = np.empty(u.shape[0])
    for n, un in enumerate(u):
        x = p.A_bar * x + p.B_bar * un
        y[n] = p.C @ x + p.D * un
    return y


def ssm_conv_kernel(p: DiscreteSSMParams, L: int) -> np.ndarray:
    if L < 1:
        raise ValueError(f"kernel length must be >= 1, got {L}")
    powers = p.A_bar[None, :] ** np.arange(L)[:, None]  # (L, N)
    return powers @ (p.C * p.B_bar)


def ssm_conv_apply(K, u, D: float = 0.0, method: str = "fft") -> np.ndarray:
    """Causal convolution ``y[n] = sum_{i<=n} K[i] u[n-i] + D u[n]``."""
    K = np.asarray(K, dtype=np.float64).reshape(-1)
    u = np.asarray(u, dtype=np.float64).reshape(-1)
    if K.shape != u.shape:
        raise ValueError(f"kernel length {K.size} != sequence length {u.size}")
    L = u.size
    if L == 0:
        return np.zeros(0)
    if method == "fft":
        n = 2 * L
        y = np.fft.irfft(np.fft.rfft(K, n) * np.fft.rfft(u, n), n)[:L]
    elif method == "direct":
        y = np.convolve(K, u)[:L]
    else:
        raise ValueError(f"unknown method {method!r}")
    return y + D * u
