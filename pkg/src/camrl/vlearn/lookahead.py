"""One-step lookahead action selection over a discrete velocity set."""
from __future__ import annotations

import numpy as np

from ..crowdsim.state import JointState, SimConfig
from ..reward import RewardConfig, compute_reward
from .features import TemporalCrowdState, to_world_frame, transform_batch
from .networks import ValueNetwork


def build_action_space(v_pref: float, n_speeds: int = 5, n_headings: int = 16) -> np.ndarray:
    """Goal-frame velocities: stop, then ``n_speeds`` x ``n_headings`` (heading 0 = toward goal)."""
    if not v_pref > 0:
        raise ValueError("v_pref must be > 0")
    speeds = (np.exp((np.arange(n_speeds) + 1) / n_speeds) - 1) / (np.e - 1) * v_pref
    headings = np.arange(n_headings) * (2 * np.pi / n_headings)
    acts = [(0.0, 0.0)]
    for sp in speeds:
        for h in headings:
            acts.append((sp * np.cos(h), sp * np.sin(h)))
    return np.array(acts)


def propagate(joint: JointState, action, dt: float) -> JointState:
    """Robot moves with ``action``; humans keep their current velocity."""
    if not dt > 0:
        raise ValueError("dt must be > 0")
    action = np.asarray(action, dtype=np.float64)
    robot = joint.robot.copy()
    robot[0:2] += dt * action
    robot[2:4] = action
    humans = joint.humans.copy()
    humans[:, 0:2] += dt * humans[:, 2:4]
    return JointState(robot, humans)


def propagate_batch(joint: JointState, actions: np.ndarray, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Next robot states (A, 8) for world-frame ``actions`` (A, 2) and the shared next humans (n, 5)."""
    robots = np.repeat(joint.robot[None], actions.shape[0], axis=0)
    robots[:, 0:2] += dt * actions
    robots[:, 2:4] = actions
    humans = joint.humans.copy()
    humans[:, 0:2] += dt * humans[:, 2:4]
    return robots, humans


def lookahead_rewards(robots: np.ndarray, humans: np.ndarray, t_next: float, rcfg: RewardConfig) -> np.ndarray:
    if humans.shape[0]:
        gap = np.hypot(robots[:, None, 0] - humans[None, :, 0], robots[:, None, 1] - humans[None, :, 1])
        d = (gap - robots[:, None, 4] - humans[None, :, 4]).min(axis=1)
    else:
        d = np.full(robots.shape[0], np.inf)
    at_goal = np.hypot(robots[:, 0] - robots[:, 5], robots[:, 1] - robots[:, 6]) < robots[:, 4]
    return np.array([compute_reward(di, bool(g), t_next, rcfg) for di, g in zip(d, at_goal)])


def action_scores(
    net: ValueNetwork,
    window: TemporalCrowdState,
    action_space: np.ndarray,
    gamma_step: float,
    dt: float,
    t: float,
    rcfg: RewardConfig,
) -> np.ndarray:
    """``R(s, a) + gamma_step * V(shifted window).final`` for every action."""
    joint = window.current
    acts = to_world_frame(action_space, joint.robot)
    robots, humans = propagate_batch(joint, acts, dt)
    rewards = lookahead_rewards(robots, humans, t + dt, rcfg)
    prefix = window.window[1:]
    if prefix:
        pr, ph = transform_batch(np.stack([j.robot for j in prefix]), np.stack([j.humans for j in prefix]))
    else:
        pr, ph = np.zeros((0, 5)), np.zeros((0, joint.n_humans, 7))
    cr, ch = transform_batch(robots, np.broadcast_to(humans, (robots.shape[0],) + humans.shape))
    values = net.lookahead(pr, ph, cr, ch)
    return rewards + gamma_step * values


def greedy_index(scores: np.ndarray) -> int:
    """Argmax; equal scores resolve to the lowest index."""
    return int(np.argmax(scores))


def select_action(
    net: ValueNetwork,
    window: TemporalCrowdState,
    epsilon: float,
    action_space: np.ndarray,
    gamma_step: float,
    dt: float,
    t: float,
    rcfg: RewardConfig,
    rng: np.random.Generator,
) -> tuple[int, np.ndarray]:
    """Returns the chosen action index and its world-frame velocity."""
    if len(action_space) == 0:
        raise ValueError("empty action space")
    if epsilon > 0 and rng.random() < epsilon:
        idx = int(rng.integers(len(action_space)))
    else:
        idx = greedy_index(action_scores(net, window, action_space, gamma_step, dt, t, rcfg))
    return idx, to_world_frame(action_space[idx], window.current.robot)


class ValuePolicy:
    """Epsilon-greedy lookahead policy over a value network, keeping its own history."""

    def __init__(
        self,
        net: ValueNetwork,
        T: int,
        gamma_step: float,
        sim: SimConfig = SimConfig(),
        epsilon: float = 0.0,
        rng: np.random.Generator | None = None,
        action_space: np.ndarray | None = None,
    ):
        self.net = net
        self.T = T
        self.gamma_step = gamma_step
        self.sim = sim
        self.rcfg = RewardConfig(discomfort_dist=sim.discomfort_dist, dt=sim.dt, time_limit=sim.time_limit)
        self.epsilon = epsilon
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.action_space = build_action_space(sim.robot_v_pref) if action_space is None else action_space
        self.history: list[JointState] = []

    def reset(self) -> None:
        self.history = []

    def act(self, joint: JointState, t: float) -> np.ndarray:
        self.history.append(joint)
        window = TemporalCrowdState.from_history(self.history, self.T)
        _, vel = select_action(
            self.net, window, self.epsilon, self.action_space, self.gamma_step, self.sim.dt, t, self.rcfg, self.rng
        )
        return vel
