from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .tensor import DimensionError, Tape, Tensor, backward


def grad_check(
    f: Callable[..., Tensor],
    x: Tensor | Sequence[Tensor],
    h: float = 1e-5,
    *,
    max_coords: int | None = None,
    max_total: int | None = None,
    abs_floor: float = 1e-6,
    rng: np.random.Generator | None = None,
) -> float:
    """Max relative error between backprop and central finite differences.

    ``f`` takes the tensors in ``x`` positionally and returns a scalar. Per
    coordinate the error is ``|a - n| / max(|a|, |n|, abs_floor)``; the floor keeps
    coordinates whose true gradient is ~0 from dividing finite-difference noise
    by nothing. ``max_coords`` samples that many coordinates per tensor;
    ``max_total`` instead samples that many coordinates across all tensors.
    """
    if not 1e-6 <= h <= 1e-4:
        raise ValueError(f"step h={h} outside [1e-6, 1e-4]")
    xs = [x] if isinstance(x, Tensor) else list(x)
    for t in xs:
        t.data = np.ascontiguousarray(t.data)
        t.requires_grad = True
        t.grad = None
    with Tape() as tape:
        out = f(*xs)
    if out.data.size != 1:
        raise DimensionError(f"grad_check: f must be scalar-valued, got shape {out.shape}")
    backward(out, tape, params=xs)

    rng = rng or np.random.default_rng(0)
    picks = []
    for k, t in enumerate(xs):
        coords = np.arange(t.data.size)
        if max_coords is not None and t.data.size > max_coords:
            coords = rng.choice(t.data.size, size=max_coords, replace=False)
        picks.extend((k, int(i)) for i in coords)
    if max_total is not None and len(picks) > max_total:
        picks = [picks[j] for j in sorted(rng.choice(len(picks), size=max_total, replace=False))]

    worst = 0.0
    for k, i in picks:
        t = xs[k]
        flat = t.data.reshape(-1)
        orig = flat[i]
        flat[i] = orig + h
        fp = f(*xs).item()
        flat[i] = orig - h
        fm = f(*xs).item()
        flat[i] = orig
        numeric = (fp - fm) / (2.0 * h)
        a = t.grad.reshape(-1)[i]
        denom = max(abs(a), abs(numeric), abs_floor)
        worst = max(worst, abs(a - numeric) / denom)
    return worst
