"""Simulation world: simultaneous human updates, holonomic robot, post-step events.

The robot is invisible to the humans: every crowd policy is queried over the
other humans only.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import orca, sfm
from .scenarios import CROWD_MODELS, ScenarioConfig, spawn_scenario
from .state import JointState, SimConfig


class Status(str, enum.Enum):
    RUNNING = "Running"
    SUCCESS = "Success"
    COLLISION = "Collision"
    TIMEOUT = "Timeout"


@dataclass
class StepEvents:
    t: float
    d_t: float
    collision: bool
    discomfort: bool
    at_goal: bool


def separation_distance(robot, humans) -> float:
    """Smallest surface-to-surface gap between the robot and any human (+inf if none)."""
    robot = robot.as_array() if hasattr(robot, "as_array") else np.asarray(robot, dtype=np.float64)
    if isinstance(humans, (list, tuple)):
        humans = [h.as_array() if hasattr(h, "as_array") else h for h in humans]
    humans = np.asarray(humans, dtype=np.float64)
    if humans.size == 0:
        return float("inf")
    humans = humans.reshape(-1, humans.shape[-1])
    d = np.hypot(humans[:, 0] - robot[0], humans[:, 1] - robot[1]) - robot[4] - humans[:, 4]
    return float(d.min())


def classify(d_t: float, dist_to_goal: float, t: float, goal_tolerance: float, time_limit: float = 25.0) -> Status:
    if t < 0:
        raise ValueError("t must be >= 0")
    if d_t <= 0:
        return Status.COLLISION
    if dist_to_goal < goal_tolerance:
        return Status.SUCCESS
    if t >= time_limit:
        return Status.TIMEOUT
    return Status.RUNNING


class World:
    def __init__(self, robot, humans, crowd_model: str = "orca", sim: SimConfig = SimConfig(), seed: int = 0):
        if crowd_model not in CROWD_MODELS:
            raise ValueError(f"unknown crowd model {crowd_model!r}")
        self.robot = np.array(robot, dtype=np.float64).reshape(8)
        self.humans = np.array(humans, dtype=np.float64).reshape(-1, 8)
        self.crowd_model = crowd_model
        self.sim = sim
        self.t = 0.0
        self.steps = 0
        self.human_done = np.zeros(self.humans.shape[0], dtype=bool)
        self._mark_arrivals()
        self.rng = np.random.default_rng(np.random.SeedSequence([int(seed), 7, CROWD_MODELS.index(crowd_model)]))

    @classmethod
    def from_scenario(cls, cfg: ScenarioConfig, sim: SimConfig = SimConfig()) -> "World":
        robot, humans = spawn_scenario(cfg, sim)
        return cls(robot, humans, cfg.crowd_model, sim, seed=cfg.seed)

    @property
    def n_humans(self) -> int:
        return self.humans.shape[0]

    def joint_state(self) -> JointState:
        return JointState(self.robot.copy(), self.humans[:, :5].copy())

    def robot_goal_distance(self) -> float:
        return float(np.hypot(*(self.robot[0:2] - self.robot[5:7])))

    def _mark_arrivals(self) -> None:
        d = np.hypot(*(self.humans[:, 0:2] - self.humans[:, 5:7]).T)
        arrived = d < self.humans[:, 4]
        self.human_done |= arrived
        self.humans[self.human_done, 2:4] = 0.0

    def human_velocities(self) -> np.ndarray:
        sim = self.sim
        obs = self.humans[:, :5]
        out = np.zeros((self.n_humans, 2))
        for i in range(self.n_humans):
            if self.human_done[i]:
                continue
            others = np.delete(obs, i, axis=0)
            if self.crowd_model == "orca":
                out[i] = orca.orca_policy(
                    self.humans[i], others, sim.dt, sim.orca_time_horizon, sim.orca_neighbor_dist,
                    safety_space=sim.orca_safety_space,
                )
            else:
                out[i] = sfm.sfm_policy(self.humans[i], others, sim.dt, sim.sfm_tau, sim.sfm_A, sim.sfm_B, rng=self.rng)
        return out

    def step(self, action) -> StepEvents:
        action = np.asarray(action, dtype=np.float64).reshape(2)
        dt = self.sim.dt
        vel = self.human_velocities()
        self.humans[:, 2:4] = vel
        self.humans[:, 0:2] += dt * vel
        self.robot[2:4] = action
        self.robot[0:2] += dt * action
        self._mark_arrivals()
        self.steps += 1
        self.t = self.steps * dt
        d_t = separation_distance(self.robot, self.humans[:, :5])
        return StepEvents(
            t=self.t,
            d_t=d_t,
            collision=d_t <= 0,
            discomfort=0 < d_t < self.sim.discomfort_dist,
            at_goal=self.robot_goal_distance() < self.sim.robot_radius,
        )


def check_termination(world: World, t: float | None = None, goal_tolerance: float | None = None) -> Status:
    t = world.t if t is None else t
    tol = world.robot[4] if goal_tolerance is None else goal_tolerance
    d_t = separation_distance(world.robot, world.humans[:, :5])
    return classify(d_t, world.robot_goal_distance(), t, tol, world.sim.time_limit)
