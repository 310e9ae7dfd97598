"""Small functional layers over :mod:`camrl.numerics.tensor`.

Parameters live in flat ``dict[str, Tensor]`` maps; every layer takes the map
plus a name prefix, so a whole network checkpoints as one flat key space.
"""
from __future__ import annotations

import numpy as np

from . import tensor as T
from .tensor import DimensionError, Tensor, make_result

Params = dict[str, Tensor]


def init_linear(params: Params, prefix: str, n_in: int, n_out: int, rng: np.random.Generator, bias: bool = True, scale: float = 1.0) -> None:
    bound = scale / np.sqrt(n_in)
    params[f"{prefix}.w"] = Tensor(rng.uniform(-bound, bound, size=(n_in, n_out)), requires_grad=True)
    if bias:
        params[f"{prefix}.b"] = Tensor(rng.uniform(-bound, bound, size=(n_out,)), requires_grad=True)


def linear(params: Params, prefix: str, x: Tensor) -> Tensor:
    w = params[f"{prefix}.w"]
    if x.shape[-1] != w.shape[0]:
        raise DimensionError(f"{prefix}: input width {x.shape[-1]} != {w.shape[0]}")
    y = T.matmul(x, w)
    b = params.get(f"{prefix}.b")
    return y + b if b is not None else y


def linear_np(params: Params, prefix: str, x: np.ndarray) -> np.ndarray:
    y = x @ params[f"{prefix}.w"].data
    b = params.get(f"{prefix}.b")
    return y + b.data if b is not None else y


# GRU --------------------------------------------------------------------------

def init_gru(params: Params, prefix: str, n_in: int, hidden: int, rng: np.random.Generator) -> None:
    bound = 1.0 / np.sqrt(hidden)
    params[f"{prefix}.wx"] = Tensor(rng.uniform(-bound, bound, size=(n_in, 3 * hidden)), requires_grad=True)
    params[f"{prefix}.wh"] = Tensor(rng.uniform(-bound, bound, size=(hidden, 3 * hidden)), requires_grad=True)
    params[f"{prefix}.bx"] = Tensor(rng.uniform(-bound, bound, size=(3 * hidden,)), requires_grad=True)
    params[f"{prefix}.bh"] = Tensor(rng.uniform(-bound, bound, size=(3 * hidden,)), requires_grad=True)


def gru_cell(params: Params, prefix: str, x: Tensor, h: Tensor) -> Tensor:
    """h' = (1 - z) * n + z * h with reset gate applied to the hidden candidate term."""
    H = h.shape[-1]
    gx = T.matmul(x, params[f"{prefix}.wx"]) + params[f"{prefix}.bx"]
    gh = T.matmul(h, params[f"{prefix}.wh"]) + params[f"{prefix}.bh"]
    r = T.sigmoid(gx[..., :H] + gh[..., :H])
    z = T.sigmoid(gx[..., H : 2 * H] + gh[..., H : 2 * H])
    n = T.tanh(gx[..., 2 * H :] + r * gh[..., 2 * H :])
    return n + z * (h - n)


def gru_cell_np(params: Params, prefix: str, x: np.ndarray, h: np.ndarray) -> np.ndarray:
    H = h.shape[-1]
    gx = x @ params[f"{prefix}.wx"].data + params[f"{prefix}.bx"].data
    gh = h @ params[f"{prefix}.wh"].data + params[f"{prefix}.bh"].data
    r = T.stable_sigmoid(gx[..., :H] + gh[..., :H])
    z = T.stable_sigmoid(gx[..., H : 2 * H] + gh[..., H : 2 * H])
    n = np.tanh(gx[..., 2 * H :] + r * gh[..., 2 * H :])
    return n + z * (h - n)


# LSTM -------------------------------------------------------------------------

def init_lstm(params: Params, prefix: str, n_in: int, hidden: int, rng: np.random.Generator) -> None:
    bound = 1.0 / np.sqrt(hidden)
    params[f"{prefix}.wx"] = Tensor(rng.uniform(-bound, bound, size=(n_in, 4 * hidden)), requires_grad=True)
    params[f"{prefix}.wh"] = Tensor(rng.uniform(-bound, bound, size=(hidden, 4 * hidden)), requires_grad=True)
    params[f"{prefix}.b"] = Tensor(rng.uniform(-bound, bound, size=(4 * hidden,)), requires_grad=True)


def lstm_cell(params: Params, prefix: str, x: Tensor, h: Tensor, c: Tensor) -> tuple[Tensor, Tensor]:
    H = h.shape[-1]
    g = T.matmul(x, params[f"{prefix}.wx"]) + T.matmul(h, params[f"{prefix}.wh"]) + params[f"{prefix}.b"]
    i = T.sigmoid(g[..., :H])
    f = T.sigmoid(g[..., H : 2 * H])
    o = T.sigmoid(g[..., 2 * H : 3 * H])
    cand = T.tanh(g[..., 3 * H :])
    c = f * c + i * cand
    return o * T.tanh(c), c


def lstm_cell_np(params: Params, prefix: str, x, h, c):
    H = h.shape[-1]
    g = x @ params[f"{prefix}.wx"].data + h @ params[f"{prefix}.wh"].data + params[f"{prefix}.b"].data
    i = T.stable_sigmoid(g[..., :H])
    f = T.stable_sigmoid(g[..., H : 2 * H])
    o = T.stable_sigmoid(g[..., 2 * H : 3 * H])
    c = f * c + i * np.tanh(g[..., 3 * H :])
    return o * np.tanh(c), c


# RMS normalisation ------------------------------------------------------------

def rms_norm(x: Tensor, weight: Tensor, eps: float = 1e-5) -> Tensor:
    xd, wd = x.data, weight.data
    r = 1.0 / np.sqrt(np.mean(xd * xd, axis=-1, keepdims=True) + eps)
    xhat = xd * r

    def backward(g):
        gw = (g * xhat).reshape(-1, xd.shape[-1]).sum(axis=0)
        gx_hat = g * wd
        gx = r * (gx_hat - xhat * np.mean(gx_hat * xhat, axis=-1, keepdims=True))
        return gx, gw

    return make_result(xhat * wd, (x, weight), backward, "rms_norm")


def rms_norm_np(x: np.ndarray, weight: np.ndarray, eps: float = 1e-5) -> np.ndarray:
    return x / np.sqrt(np.mean(x * x, axis=-1, keepdims=True) + eps) * weight
