from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Protocol

import numpy as np

from ..reward import RewardConfig, compute_reward
from . import orca
from .state import JointState, SimConfig
from .world import Status, World, classify


class Policy(Protocol):
    def reset(self) -> None: ...

    def act(self, joint: JointState, t: float) -> np.ndarray: ...


@dataclass
class EpisodeOutcome:
    result: Status
    elapsed: float
    trajectory: list[JointState]  # state before each action, plus the final state
    actions: list[np.ndarray] = field(default_factory=list)
    rewards: list[float] = field(default_factory=list)
    separations: list[float] = field(default_factory=list)
    discomfort_events: list[tuple[float, float]] = field(default_factory=list)

    @property
    def n_steps(self) -> int:
        return len(self.actions)


def reward_config_for(sim: SimConfig) -> RewardConfig:
    return RewardConfig(discomfort_dist=sim.discomfort_dist, dt=sim.dt, time_limit=sim.time_limit)


def run_episode(
    world: World,
    policy: Policy,
    on_step: Callable[[int, JointState, np.ndarray, float], None] | None = None,
) -> EpisodeOutcome:
    sim = world.sim
    rcfg = reward_config_for(sim)
    policy.reset()
    joint = world.joint_state()
    out = EpisodeOutcome(Status.RUNNING, 0.0, [joint])
    while True:
        action = np.asarray(policy.act(joint, world.t), dtype=np.float64).reshape(2)
        ev = world.step(action)
        reward = compute_reward(ev.d_t, ev.at_goal, ev.t, rcfg)
        joint = world.joint_state()
        out.trajectory.append(joint)
        out.actions.append(action)
        out.rewards.append(reward)
        out.separations.append(ev.d_t)
        if ev.discomfort:
            out.discomfort_events.append((ev.t, ev.d_t))
        if on_step is not None:
            on_step(world.steps, joint, action, reward)
        status = classify(ev.d_t, world.robot_goal_distance(), ev.t, sim.robot_radius, sim.time_limit)
        if status is not Status.RUNNING:
            out.result = status
            out.elapsed = ev.t
            return out


# robot policies that need no learning -----------------------------------------

class ORCARobot:
    """Robot driven by ORCA; it assumes reciprocity the (blind) humans never provide."""

    def __init__(self, sim: SimConfig = SimConfig(), safety_space: float = 0.0):
        self.sim = sim
        self.safety_space = safety_space

    def reset(self) -> None:
        pass

    def act(self, joint: JointState, t: float) -> np.ndarray:
        s = self.sim
        return orca.orca_policy(
            joint.robot, joint.humans, s.dt, s.orca_time_horizon, s.orca_neighbor_dist, safety_space=self.safety_space
        )


class GoalSeeker:
    """Straight line to goal at preferred speed, ignoring everyone."""

    def reset(self) -> None:
        pass

    def act(self, joint: JointState, t: float) -> np.ndarray:
        r = joint.robot
        return np.array(orca.preferred_velocity(r[0:2], r[5:7], r[7]))


# trajectory log ----------------------------------------------------------------

def trajectory_records(outcome: EpisodeOutcome, dt: float) -> list[dict[str, Any]]:
    recs = []
    for k, action in enumerate(outcome.actions):
        state = outcome.trajectory[k + 1]
        recs.append(
            {
                "step": k + 1,
                "t": (k + 1) * dt,
                "robot": state.robot.tolist(),
                "humans": state.humans.tolist(),
                "action": action.tolist(),
                "reward": outcome.rewards[k],
                "d_t": outcome.separations[k],
            }
        )
    return recs


def write_trajectory_log(path, outcome: EpisodeOutcome, header: dict[str, Any], dt: float) -> Path:
    """One JSON object per line: a header, the initial state, then one record per step."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    init = outcome.trajectory[0]
    with open(path, "w") as fh:
        fh.write(json.dumps({"type": "header", **header}) + "\n")
        fh.write(json.dumps({"type": "initial", "t": 0.0, "robot": init.robot.tolist(), "humans": init.humans.tolist()}) + "\n")
        for rec in trajectory_records(outcome, dt):
            fh.write(json.dumps({"type": "step", **rec}) + "\n")
        fh.write(json.dumps({"type": "outcome", "result": outcome.result.value, "elapsed": outcome.elapsed}) + "\n")
    return path


def read_trajectory_log(path) -> tuple[dict[str, Any], EpisodeOutcome]:
    """Rebuild an :class:`EpisodeOutcome` from a log; ``result`` is re-derived by the caller if needed."""
    header: dict[str, Any] = {}
    traj: list[JointState] = []
    out = EpisodeOutcome(Status.RUNNING, 0.0, traj)
    with open(path) as fh:
        for line in fh:
            rec = json.loads(line)
            kind = rec["type"]
            if kind == "header":
                header = {k: v for k, v in rec.items() if k != "type"}
            elif kind == "initial":
                traj.append(JointState(np.array(rec["robot"]), np.array(rec["humans"])))
            elif kind == "step":
                traj.append(JointState(np.array(rec["robot"]), np.array(rec["humans"])))
                out.actions.append(np.array(rec["action"]))
                out.rewards.append(rec["reward"])
                out.separations.append(rec["d_t"])
                out.elapsed = rec["t"]
            elif kind == "outcome":
                out.result = Status(rec["result"])
    return header, out
