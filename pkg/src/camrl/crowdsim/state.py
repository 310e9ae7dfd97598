"""Agent state model.

Agents expose an observable part (position, velocity, radius) and a hidden
part (goal, preferred speed). A joint state is the robot's full state plus the
observable states of every human. Internally joint states are array-backed:
``robot`` is ``[px, py, vx, vy, r, gx, gy, v_pref]`` and ``humans`` is (n, 5)
``[px, py, vx, vy, r]``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ROBOT_DIM = 8
OBS_DIM = 5


@dataclass(frozen=True)
class ObservableState:
    p: tuple[float, float]
    v: tuple[float, float]
    r: float

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError(f"radius must be > 0, got {self.r}")
        if not np.all(np.isfinite([*self.p, *self.v, self.r])):
            raise ValueError("observable state must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([*self.p, *self.v, self.r], dtype=np.float64)

    @classmethod
    def from_array(cls, a) -> "ObservableState":
        return cls((float(a[0]), float(a[1])), (float(a[2]), float(a[3])), float(a[4]))


@dataclass(frozen=True)
class HiddenState:
    p_g: tuple[float, float]
    v_pref: float

    def __post_init__(self):
        if not self.v_pref > 0:
            raise ValueError(f"v_pref must be > 0, got {self.v_pref}")


@dataclass(frozen=True)
class FullAgentState:
    observable: ObservableState
    hidden: HiddenState

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.observable.as_array(), [*self.hidden.p_g, self.hidden.v_pref]])

    @classmethod
    def from_array(cls, a) -> "FullAgentState":
        return cls(ObservableState.from_array(a[:5]), HiddenState((float(a[5]), float(a[6])), float(a[7])))


@dataclass
class JointState:
    robot: np.ndarray  # (8,)
    humans: np.ndarray  # (n, 5)

    def __post_init__(self):
        self.robot = np.asarray(self.robot, dtype=np.float64).reshape(ROBOT_DIM)
        self.humans = np.asarray(self.humans, dtype=np.float64).reshape(-1, OBS_DIM)

    @property
    def n_humans(self) -> int:
        return self.humans.shape[0]

    @classmethod
    def from_states(cls, robot: FullAgentState, humans) -> "JointState":
        rows = [h.as_array() for h in humans]
        return cls(robot.as_array(), np.array(rows).reshape(-1, OBS_DIM))

    def robot_state(self) -> FullAgentState:
        return FullAgentState.from_array(self.robot)

    def human_states(self) -> list[ObservableState]:
        return [ObservableState.from_array(h) for h in self.humans]

    def copy(self) -> "JointState":
        return JointState(self.robot.copy(), self.humans.copy())


@dataclass(frozen=True)
class SimConfig:
    dt: float = 0.25
    time_limit: float = 25.0
    robot_radius: float = 0.3
    robot_v_pref: float = 1.0
    human_radius: float = 0.3
    human_v_pref: float = 1.0
    discomfort_dist: float = 0.2
    orca_time_horizon: float = 5.0
    orca_neighbor_dist: float = 10.0
    orca_safety_space: float = 0.0
    sfm_tau: float = 0.5
    sfm_A: float = 2.0
    sfm_B: float = 0.3
    spawn_retries: int = 1000

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be > 0")
        if not self.time_limit > 0:
            raise ValueError("time_limit must be > 0")
