"""Social force pedestrian model: goal attraction plus exponential repulsion."""
from __future__ import annotations

import numpy as np


def sfm_acceleration(self_state, neighbors, tau: float, A: float, B: float, rng: np.random.Generator | None = None) -> np.ndarray:
    s = np.asarray(self_state, dtype=np.float64)
    p, v, r, goal, v_pref = s[0:2], s[2:4], s[4], s[5:7], s[7]
    to_goal = goal - p
    dist = np.hypot(*to_goal)
    desired = v_pref * to_goal / dist if dist > 0 else np.zeros(2)
    acc = (desired - v) / tau
    nb = np.asarray(neighbors, dtype=np.float64).reshape(-1, 5)
    if nb.shape[0]:
        diff = p - nb[:, 0:2]
        d = np.hypot(diff[:, 0], diff[:, 1])
        coincident = d == 0.0
        n = np.empty_like(diff)
        n[~coincident] = diff[~coincident] / d[~coincident, None]
        if coincident.any():
            if rng is None:
                raise ValueError("coincident agents need an rng for the repulsion direction")
            ang = rng.uniform(0.0, 2.0 * np.pi, size=int(coincident.sum()))
            n[coincident] = np.stack([np.cos(ang), np.sin(ang)], axis=1)
        mag = A * np.exp((r + nb[:, 4] - d) / B)
        acc = acc + (mag[:, None] * n).sum(axis=0)
    return acc


def sfm_policy(
    self_state,
    neighbors,
    dt: float,
    tau: float = 0.5,
    A: float = 2.0,
    B: float = 0.3,
    max_speed: float | None = None,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Euler-integrated velocity after one step of social forces, clipped to ``max_speed``."""
    if not dt > 0:
        raise ValueError("dt must be > 0")
    s = np.asarray(self_state, dtype=np.float64)
    max_speed = s[7] if max_speed is None else max_speed
    v = s[2:4] + dt * sfm_acceleration(s, neighbors, tau, A, B, rng)
    speed = np.hypot(*v)
    if speed > max_speed:
        v = v * (max_speed / speed)
    return v
