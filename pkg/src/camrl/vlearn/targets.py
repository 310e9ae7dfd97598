from __future__ import annotations

import numpy as np


def step_discount(gamma: float, dt: float, v_pref: float, mode: str = "normalized") -> float:
    """Per-step discount: ``gamma ** (dt * v_pref)`` ("normalized") or ``gamma`` ("per_step")."""
    if not 0 <= gamma < 1:
        raise ValueError(f"gamma must lie in [0, 1), got {gamma}")
    if mode == "normalized":
        return gamma ** (dt * v_pref)
    if mode == "per_step":
        return gamma
    raise ValueError(f"unknown discount mode {mode!r}")


def assemble_target_values(rewards, gamma_step: float) -> np.ndarray:
    """Discounted return-to-go ``y_t = r_t + gamma_step * y_{t+1}``, accumulated backwards."""
    rewards = np.asarray(rewards, dtype=np.float64)
    y = np.empty_like(rewards)
    acc = 0.0
    for k in range(rewards.size - 1, -1, -1):
        acc = rewards[k] + gamma_step * acc
        y[k] = acc
    return y


def bootstrap_targets(rewards, next_values, gamma_step: float) -> np.ndarray:
    """One-step backups; the last step is terminal and takes its reward alone."""
    rewards = np.asarray(rewards, dtype=np.float64)
    next_values = np.asarray(next_values, dtype=np.float64)
    y = rewards + gamma_step * next_values
    if y.size:
        y[-1] = rewards[-1]
    return y


def window_indices(n_steps: int, T: int) -> np.ndarray:
    """(n_steps, T+1) state indices of each step's window, front-padded with index 0."""
    k = np.arange(n_steps)[:, None] + np.arange(-T, 1)[None, :]
    return np.maximum(k, 0)


def window_targets(y: np.ndarray, T: int) -> np.ndarray:
    """Targets aligned with every step's window: row k holds ``y`` at the window's steps."""
    return np.asarray(y)[window_indices(len(y), T)]
