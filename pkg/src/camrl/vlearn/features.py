"""Robot-centric feature rows.

Each joint state is translated so the robot sits at the origin and rotated so
its goal lies on +x. Robot row: ``(dg, v_pref, vx, vy, r)``. Human row:
``(px, py, vx, vy, r, distance to robot, r + robot r)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..crowdsim.state import JointState

ROBOT_FEATS = 5
HUMAN_FEATS = 7


def goal_angle(robot) -> np.ndarray:
    robot = np.asarray(robot)
    return np.arctan2(robot[..., 6] - robot[..., 1], robot[..., 5] - robot[..., 0])


def transform_batch(robots: np.ndarray, humans: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``robots`` (..., 8), ``humans`` (..., n, 5) -> rows (..., 5) and (..., n, 7)."""
    robots = np.asarray(robots, dtype=np.float64)
    humans = np.asarray(humans, dtype=np.float64)
    theta = goal_angle(robots)
    c, s = np.cos(theta), np.sin(theta)
    gx, gy = robots[..., 5] - robots[..., 0], robots[..., 6] - robots[..., 1]
    rvx = robots[..., 2] * c + robots[..., 3] * s
    rvy = -robots[..., 2] * s + robots[..., 3] * c
    robot_rows = np.stack([np.hypot(gx, gy), robots[..., 7], rvx, rvy, robots[..., 4]], axis=-1)

    c, s = c[..., None], s[..., None]
    dx = humans[..., 0] - robots[..., None, 0]
    dy = humans[..., 1] - robots[..., None, 1]
    px = dx * c + dy * s
    py = -dx * s + dy * c
    hvx = humans[..., 2] * c + humans[..., 3] * s
    hvy = -humans[..., 2] * s + humans[..., 3] * c
    r = humans[..., 4]
    human_rows = np.stack([px, py, hvx, hvy, r, np.hypot(dx, dy), r + robots[..., None, 4]], axis=-1)
    return robot_rows, human_rows


def transform_state(joint: JointState) -> tuple[np.ndarray, np.ndarray]:
    return transform_batch(joint.robot, joint.humans)


def to_goal_frame(vectors: np.ndarray, robot) -> np.ndarray:
    theta = goal_angle(robot)
    c, s = np.cos(theta), np.sin(theta)
    v = np.asarray(vectors, dtype=np.float64)
    return np.stack([v[..., 0] * c + v[..., 1] * s, -v[..., 0] * s + v[..., 1] * c], axis=-1)


def to_world_frame(vectors: np.ndarray, robot) -> np.ndarray:
    theta = goal_angle(robot)
    c, s = np.cos(theta), np.sin(theta)
    v = np.asarray(vectors, dtype=np.float64)
    return np.stack([v[..., 0] * c - v[..., 1] * s, v[..., 0] * s + v[..., 1] * c], axis=-1)


@dataclass
class TemporalCrowdState:
    """Joint states at times t-T..t, oldest first."""

    window: list[JointState]

    def __post_init__(self):
        if not self.window:
            raise ValueError("window needs at least one joint state")

    @property
    def T(self) -> int:
        return len(self.window) - 1

    @classmethod
    def from_history(cls, history: list[JointState], T: int) -> "TemporalCrowdState":
        """Last ``T + 1`` states; short histories are front-padded with the first state."""
        if not history:
            raise ValueError("empty history")
        recent = history[-(T + 1):]
        return cls([recent[0]] * (T + 1 - len(recent)) + list(recent))

    def shifted(self, nxt: JointState) -> "TemporalCrowdState":
        return TemporalCrowdState(self.window[1:] + [nxt])

    @property
    def current(self) -> JointState:
        return self.window[-1]

    def features(self) -> tuple[np.ndarray, np.ndarray]:
        """(T+1, 5) robot rows and (T+1, n, 7) human rows."""
        robots = np.stack([j.robot for j in self.window])
        humans = np.stack([j.humans for j in self.window])
        return transform_batch(robots, humans)
