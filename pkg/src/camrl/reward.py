"""Piecewise navigation reward and discomfort bookkeeping."""
from __future__ import annotations

from dataclasses import dataclass

COLLISION_PENALTY = -0.25
GOAL_REWARD = 1.0
TIMEOUT_PENALTY = -0.5


@dataclass(frozen=True)
class RewardConfig:
    discomfort_dist: float = 0.2  # r_c
    dt: float = 0.25
    time_limit: float = 25.0
    collision_penalty: float = COLLISION_PENALTY
    goal_reward: float = GOAL_REWARD
    timeout_penalty: float = TIMEOUT_PENALTY

    def __post_init__(self):
        if not self.discomfort_dist > 0:
            raise ValueError("discomfort_dist must be > 0")
        if not self.dt > 0:
            raise ValueError("dt must be > 0")


def compute_reward(d_t: float, at_goal: bool, t: float, cfg: RewardConfig = RewardConfig()) -> float:
    """Cases are tried in order: collision, discomfort, goal, timeout, otherwise 0."""
    if d_t <= 0:
        return cfg.collision_penalty
    if d_t < cfg.discomfort_dist:
        return (d_t - cfg.discomfort_dist) * cfg.dt / 2
    if at_goal:
        return cfg.goal_reward
    if t >= cfg.time_limit:
        return cfg.timeout_penalty
    return 0.0


def is_discomfort(d_t: float, cfg: RewardConfig = RewardConfig()) -> bool:
    return 0 < d_t < cfg.discomfort_dist
