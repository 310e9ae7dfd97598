"""Selective (input-dependent) state-space scan.

Shapes follow the usual (batch, length, channels, state) = (B, L, D, N) layout:
``B, C`` are (B, L, N), ``delta`` is (B, L, D), and the discretised pair
``A_bar, B_bar`` is (B, L, D, N). ``A_bar`` uses the exact exponential; the input
map uses the Euler form ``B_bar = delta * B``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..numerics import tensor as T
from ..numerics.tensor import DimensionError, Tensor, make_result


@dataclass
class SelectiveSSMParams:
    A_log: Tensor  # (D, N); realised A = -exp(A_log)
    W_B: Tensor  # (D, N)
    b_B: Tensor  # (N,)
    W_C: Tensor  # (D, N)
    b_C: Tensor  # (N,)
    dt_down: Tensor  # (D, R)
    dt_up: Tensor  # (R, D)
    dt_bias: Tensor  # (D,)
    D: Tensor  # (D,) skip

    FIELDS = ("A_log", "W_B", "b_B", "W_C", "b_C", "dt_down", "dt_up", "dt_bias", "D")

    @property
    def channels(self) -> int:
        return self.A_log.shape[0]

    @property
    def state_size(self) -> int:
        return self.A_log.shape[1]

    @classmethod
    def from_flat(cls, params: dict[str, Tensor], prefix: str) -> "SelectiveSSMParams":
        return cls(**{f: params[f"{prefix}.{f}"] for f in cls.FIELDS})

    def to_flat(self, prefix: str) -> dict[str, Tensor]:
        return {f"{prefix}.{f}": getattr(self, f) for f in self.FIELDS}


def init_selective(
    d: int,
    n: int,
    rng: np.random.Generator,
    dt_rank: int = 1,
    dt_min: float = 1e-3,
    dt_max: float = 0.1,
) -> SelectiveSSMParams:
    bound = 1.0 / np.sqrt(d)
    dt = np.exp(rng.uniform(np.log(dt_min), np.log(dt_max), size=d))
    inv_softplus = dt + np.log(-np.expm1(-dt))

    def p(a):
        return Tensor(a, requires_grad=True)

    return SelectiveSSMParams(
        A_log=p(np.log(np.tile(np.arange(1, n + 1, dtype=np.float64), (d, 1)))),
        W_B=p(rng.uniform(-bound, bound, size=(d, n))),
        b_B=p(np.zeros(n)),
        W_C=p(rng.uniform(-bound, bound, size=(d, n))),
        b_C=p(np.zeros(n)),
        dt_down=p(rng.uniform(-bound, bound, size=(d, dt_rank))),
        dt_up=p(rng.uniform(-1.0, 1.0, size=(dt_rank, d)) / np.sqrt(dt_rank)),
        dt_bias=p(inv_softplus),
        D=p(np.ones(d)),
    )


# projections ------------------------------------------------------------------

def project(params: SelectiveSSMParams, x: Tensor) -> tuple[Tensor, Tensor, Tensor, Tensor]:
    """Return ``(A, B, C, delta)`` for input ``x`` of shape (B, L, D)."""
    if x.ndim != 3 or x.shape[-1] != params.channels:
        raise DimensionError(f"selective scan expects (B, L, {params.channels}), got {x.shape}")
    A = -T.exp(params.A_log)
    Bm = T.matmul(x, params.W_B) + params.b_B
    Cm = T.matmul(x, params.W_C) + params.b_C
    delta = T.softplus(params.dt_bias + T.matmul(T.matmul(x, params.dt_down), params.dt_up))
    return A, Bm, Cm, delta


def project_np(params: SelectiveSSMParams, x: np.ndarray):
    A = -np.exp(params.A_log.data)
    Bm = x @ params.W_B.data + params.b_B.data
    Cm = x @ params.W_C.data + params.b_C.data
    delta = T.stable_softplus(params.dt_bias.data + (x @ params.dt_down.data) @ params.dt_up.data)
    return A, Bm, Cm, delta


def discretize_selective(delta: np.ndarray, A: np.ndarray, Bm: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-step ``A_bar = exp(delta A)`` and ``B_bar = delta B``, both (B, L, D, N)."""
    if delta.ndim != 3 or Bm.ndim != 3 or A.ndim != 2:
        raise DimensionError("discretize: expected delta (B,L,D), A (D,N), B (B,L,N)")
    if delta.shape[-1] != A.shape[0] or Bm.shape[-1] != A.shape[1] or delta.shape[:2] != Bm.shape[:2]:
        raise DimensionError(f"discretize: delta {delta.shape}, A {A.shape}, B {Bm.shape}")
    if np.any(delta <= 0):
        raise ArithmeticError("step sizes must be positive")
    A_bar = np.exp(delta[..., None] * A)
    if np.any(A_bar >= 1.0):
        raise ArithmeticError("unstable A_bar: entries must be < 1")
    B_bar = delta[..., None] * Bm[:, :, None, :]
    return A_bar, B_bar


# fused differentiable scan ----------------------------------------------------

def scan(u: Tensor, delta: Tensor, A: Tensor, Bm: Tensor, Cm: Tensor, D: Tensor) -> Tensor:
    """``h_t = A_bar_t * h_{t-1} + B_bar_t u_t``, ``y_t = <C_t, h_t> + D u_t``; h_0 = 0."""
    ud, dd, Ad, Bd, Cd, Dd = u.data, delta.data, A.data, Bm.data, Cm.data, D.data
    if ud.shape != dd.shape or ud.ndim != 3:
        raise DimensionError(f"scan: u {ud.shape} vs delta {dd.shape}")
    b, L, d = ud.shape
    n = Ad.shape[-1]
    if Ad.shape != (d, n) or Bd.shape != (b, L, n) or Cd.shape != (b, L, n) or Dd.shape != (d,):
        raise DimensionError(f"scan: A {Ad.shape}, B {Bd.shape}, C {Cd.shape}, D {Dd.shape} for u {ud.shape}")
    if np.any(dd <= 0):
        raise ArithmeticError("step sizes must be positive")
    dA = np.exp(dd[..., None] * Ad)
    if np.any(dA >= 1.0):
        raise ArithmeticError("unstable A_bar: entries must be < 1")
    dxu = dd * ud
    hs = np.empty_like(dA)
    h = np.zeros((b, d, n))
    for t in range(L):
        h = dA[:, t] * h + dxu[:, t, :, None] * Bd[:, t, None, :]
        hs[:, t] = h
    y = np.einsum("bldn,bln->bld", hs, Cd) + ud * Dd

    def backward(gy):
        gD = (gy * ud).sum(axis=(0, 1))
        gC = np.einsum("bld,bldn->bln", gy, hs)
        g_delta = np.zeros((b, L, d))
        gBx = np.empty((b, L, d))
        gB = np.empty((b, L, n))
        gA = np.zeros((d, n))
        gh = np.zeros((b, d, n))
        for t in range(L - 1, -1, -1):
            gh += gy[:, t, :, None] * Cd[:, t, None, :]
            gBx[:, t] = np.einsum("bdn,bn->bd", gh, Bd[:, t])
            gB[:, t] = np.einsum("bdn,bd->bn", gh, dxu[:, t])
            if t > 0:
                tmp = gh * hs[:, t - 1] * dA[:, t]
                g_delta[:, t] = np.einsum("bdn,dn->bd", tmp, Ad)
                gA += np.einsum("bdn,bd->dn", tmp, dd[:, t])
            gh *= dA[:, t]
        g_delta += gBx * ud
        gu = gy * Dd + gBx * dd
        return gu, g_delta, gA, gB, gC, gD

    return make_result(y, (u, delta, A, Bm, Cm, D), backward, "selective_scan")


def selective_scan(params: SelectiveSSMParams, x: Tensor) -> Tensor:
    A, Bm, Cm, delta = project(params, x)
    return scan(x, delta, A, Bm, Cm, params.D)


# parallel-form check ----------------------------------------------------------

def combine(left, right):
    """Compose first-order maps ``h -> a h + b``: apply ``left`` then ``right``."""
    a1, b1 = left
    a2, b2 = right
    return a2 * a1, a2 * b1 + b2


def associative_scan(a: np.ndarray, b: np.ndarray, axis: int = 1) -> np.ndarray:
    """Inclusive scan of ``h_t = a_t h_{t-1} + b_t`` (h_0 = 0) by log-step doubling."""
    a = np.moveaxis(np.array(a, dtype=np.float64), axis, 0)
    b = np.moveaxis(np.array(b, dtype=np.float64), axis, 0)
    L = a.shape[0]
    offset = 1
    while offset < L:
        a_new, b_new = combine((a[:-offset], b[:-offset]), (a[offset:], b[offset:]))
        a = np.concatenate([a[:offset], a_new])
        b = np.concatenate([b[:offset], b_new])
        offset *= 2
    return np.moveaxis(b, 0, axis)


def associative_scan_selective(params: SelectiveSSMParams, x) -> np.ndarray:
    xd = x.data if isinstance(x, Tensor) else np.asarray(x, dtype=np.float64)
    if xd.ndim != 3 or xd.shape[-1] != params.channels:
        raise DimensionError(f"selective scan expects (B, L, {params.channels}), got {xd.shape}")
    A, Bm, Cm, delta = project_np(params, xd)
    A_bar, B_bar = discretize_selective(delta, A, Bm)
    hs = associative_scan(A_bar, B_bar * xd[..., None], axis=1)
    return np.einsum("bldn,bln->bld", hs, Cm) + xd * params.D.data
