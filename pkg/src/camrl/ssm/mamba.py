"""Mamba residual block and the four-block stack.

Block: RMS-norm -> in-projection to two branches of width ``expand * d_model``;
branch one runs a depthwise causal conv, SiLU and the selective scan, branch two
is a SiLU gate; their product is projected back and added to the input.

Besides the taped forward there is a numpy inference path with an explicit
recurrent state (conv tail + scan hidden state), used to score many one-step
continuations of a shared prefix without re-running the prefix.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..numerics import tensor as T
from ..numerics.layers import Params, rms_norm, rms_norm_np
from ..numerics.tensor import DimensionError, Tensor, make_result
from . import selective
from .selective import SelectiveSSMParams

N_LAYERS = 4


@dataclass(frozen=True)
class MambaConfig:
    d_model: int = 64
    d_state: int = 16
    expand: int = 2
    d_conv: int = 4
    dt_rank: int = 1
    n_layers: int = N_LAYERS

    @property
    def d_inner(self) -> int:
        return self.expand * self.d_model


def init_mamba_block(params: Params, prefix: str, cfg: MambaConfig, rng: np.random.Generator) -> None:
    dm, di, k = cfg.d_model, cfg.d_inner, cfg.d_conv

    def p(a):
        return Tensor(a, requires_grad=True)

    params[f"{prefix}.norm.w"] = p(np.ones(dm))
    params[f"{prefix}.in_proj.w"] = p(rng.uniform(-1, 1, size=(dm, 2 * di)) / np.sqrt(dm))
    params[f"{prefix}.conv.w"] = p(rng.uniform(-1, 1, size=(di, k)) / np.sqrt(k))
    params[f"{prefix}.conv.b"] = p(rng.uniform(-1, 1, size=di) / np.sqrt(k))
    params.update(selective.init_selective(di, cfg.d_state, rng, dt_rank=cfg.dt_rank).to_flat(f"{prefix}.ssm"))
    params[f"{prefix}.out_proj.w"] = p(rng.uniform(-1, 1, size=(di, dm)) / np.sqrt(di))


def init_mamba_stack(params: Params, prefix: str, cfg: MambaConfig, rng: np.random.Generator) -> None:
    for i in range(cfg.n_layers):
        init_mamba_block(params, f"{prefix}.{i}", cfg, rng)


def block_count(params: Params, prefix: str) -> int:
    n = 0
    while f"{prefix}.{n}.in_proj.w" in params:
        n += 1
    return n


# causal depthwise convolution -------------------------------------------------

def causal_conv(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """``y[:, t, c] = b[c] + sum_k w[c, k] x[:, t - K + 1 + k, c]`` with zero history."""
    xd, wd, bd = x.data, w.data, b.data
    if xd.ndim != 3 or wd.shape[0] != xd.shape[-1]:
        raise DimensionError(f"causal_conv: x {xd.shape}, w {wd.shape}")
    K = wd.shape[1]
    L = xd.shape[1]
    xp = np.concatenate([np.zeros((xd.shape[0], K - 1, xd.shape[2])), xd], axis=1)
    y = np.broadcast_to(bd, xd.shape).copy()
    for k in range(K):
        y += wd[:, k] * xp[:, k : k + L]

    def backward(g):
        gw = np.empty_like(wd)
        gxp = np.zeros_like(xp)
        for k in range(K):
            gw[:, k] = (g * xp[:, k : k + L]).sum(axis=(0, 1))
            gxp[:, k : k + L] += g * wd[:, k]
        return gxp[:, K - 1 :], gw, g.sum(axis=(0, 1))

    return make_result(y, (x, w, b), backward, "causal_conv")


# taped forward ----------------------------------------------------------------

def mamba_block(params: Params, prefix: str, x: Tensor) -> Tensor:
    w_in = params[f"{prefix}.in_proj.w"]
    if x.ndim != 3 or x.shape[-1] != w_in.shape[0]:
        raise DimensionError(f"{prefix}: expected (B, L, {w_in.shape[0]}), got {x.shape}")
    di = w_in.shape[1] // 2
    h = rms_norm(x, params[f"{prefix}.norm.w"])
    xz = T.matmul(h, w_in)
    xi, z = xz[..., :di], xz[..., di:]
    xc = T.silu(causal_conv(xi, params[f"{prefix}.conv.w"], params[f"{prefix}.conv.b"]))
    y = selective.selective_scan(SelectiveSSMParams.from_flat(params, f"{prefix}.ssm"), xc)
    y = y * T.silu(z)
    return x + T.matmul(y, params[f"{prefix}.out_proj.w"])


def mamba_stack(params: Params, prefix: str, seq: Tensor) -> Tensor:
    n = block_count(params, prefix)
    if n != N_LAYERS:
        raise ValueError(f"mamba stack {prefix!r} holds {n} blocks, expected {N_LAYERS}")
    for i in range(n):
        seq = mamba_block(params, f"{prefix}.{i}", seq)
    return seq


# numpy inference with explicit state -----------------------------------------

def mamba_block_np(params: Params, prefix: str, x: np.ndarray):
    """Forward over a full sequence; returns ``(y, state)`` where state = (conv tail, h)."""
    w_in = params[f"{prefix}.in_proj.w"].data
    di = w_in.shape[1] // 2
    cw, cb = params[f"{prefix}.conv.w"].data, params[f"{prefix}.conv.b"].data
    K = cw.shape[1]
    b, L, _ = x.shape
    xz = rms_norm_np(x, params[f"{prefix}.norm.w"].data) @ w_in
    xi, z = xz[..., :di], xz[..., di:]
    xp = np.concatenate([np.zeros((b, K - 1, di)), xi], axis=1)
    conv = np.broadcast_to(cb, xi.shape).copy()
    for k in range(K):
        conv += cw[:, k] * xp[:, k : k + L]
    xc = conv * T.stable_sigmoid(conv)
    ssm = SelectiveSSMParams.from_flat(params, f"{prefix}.ssm")
    A, Bm, Cm, delta = selective.project_np(ssm, xc)
    dA = np.exp(delta[..., None] * A)
    dBu = (delta * xc)[..., None] * Bm[:, :, None, :]
    h = np.zeros((b, di, A.shape[1]))
    ys = np.empty((b, L, di))
    for t in range(L):
        h = dA[:, t] * h + dBu[:, t]
        ys[:, t] = np.einsum("bdn,bn->bd", h, Cm[:, t])
    ys += xc * ssm.D.data
    ys *= z * T.stable_sigmoid(z)
    out = x + ys @ params[f"{prefix}.out_proj.w"].data
    return out, (xp[:, L:], h)


def mamba_block_step_np(params: Params, prefix: str, x_t: np.ndarray, state):
    """One recurrent step for ``x_t`` of shape (B, d_model); ``state`` may have batch 1."""
    tail, h = state
    b = x_t.shape[0]
    w_in = params[f"{prefix}.in_proj.w"].data
    di = w_in.shape[1] // 2
    cw, cb = params[f"{prefix}.conv.w"].data, params[f"{prefix}.conv.b"].data
    xz = rms_norm_np(x_t, params[f"{prefix}.norm.w"].data) @ w_in
    xi, z = xz[:, :di], xz[:, di:]
    window = np.concatenate([np.broadcast_to(tail, (b,) + tail.shape[1:]), xi[:, None, :]], axis=1)
    conv = cb + np.einsum("bkd,dk->bd", window, cw)
    xc = conv * T.stable_sigmoid(conv)
    ssm = SelectiveSSMParams.from_flat(params, f"{prefix}.ssm")
    A, Bm, Cm, delta = selective.project_np(ssm, xc)
    h = np.exp(delta[..., None] * A) * h + (delta * xc)[..., None] * Bm[:, None, :]
    y = np.einsum("bdn,bn->bd", h, Cm) + xc * ssm.D.data
    y *= z * T.stable_sigmoid(z)
    return x_t + y @ params[f"{prefix}.out_proj.w"].data, (window[:, 1:], h)


def mamba_stack_np(params: Params, prefix: str, seq: np.ndarray):
    states = []
    for i in range(block_count(params, prefix)):
        seq, st = mamba_block_np(params, f"{prefix}.{i}", seq)
        states.append(st)
    return seq, states


def mamba_stack_step_np(params: Params, prefix: str, x_t: np.ndarray, states):
    new_states = []
    for i, st in enumerate(states):
        x_t, st = mamba_block_step_np(params, f"{prefix}.{i}", x_t, st)
        new_states.append(st)
    return x_t, new_states
