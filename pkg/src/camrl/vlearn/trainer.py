"""Imitation learning from ORCA demonstrations, then replay-buffer value RL."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..crowdsim.episode import EpisodeOutcome, ORCARobot, run_episode
from ..crowdsim.scenarios import ScenarioConfig
from ..crowdsim.state import SimConfig
from ..crowdsim.world import World
from ..numerics import tensor as T
from ..numerics.optim import AdamState, adam_step
from ..numerics.tensor import Tape, Tensor
from .features import transform_batch
from .lookahead import ValuePolicy
from .networks import ValueNetwork
from .replay import EpisodeFeatures, ReplayBuffer, ReplayEntry, episode_windows, gather_windows
from .targets import assemble_target_values, bootstrap_targets, step_discount, window_targets

log = logging.getLogger(__name__)

TRAIN_SEED_BASE = 1_000_000
DEMO_SEED_BASE = 2_000_000


@dataclass(frozen=True)
class TrainConfig:
    gamma: float = 0.9
    discount_mode: str = "normalized"
    T: int = 8
    eps_start: float = 0.5
    eps_end: float = 0.1
    eps_decay_frac: float = 0.4
    capacity: int = 100_000
    batch_size: int = 100
    target_sync: int = 50  # K, in episodes
    train_batches: int = 100  # optimiser steps after each RL episode
    il_episodes: int = 300
    il_epochs: int = 50
    il_lr: float = 1e-3
    il_batch_size: int = 100
    rl_episodes: int = 1000
    rl_lr: float = 1e-3
    demo_safety_space: float = 0.15
    train_env: str = "baseline-circle"
    train_crowd: str = "orca"
    checkpoint_every: int = 50  # RL episodes between checkpoint writes

    def __post_init__(self):
        if not 0 <= self.gamma < 1:
            raise ValueError("gamma must lie in [0, 1)")
        if self.target_sync < 1:
            raise ValueError("target_sync (K) must be >= 1")
        if self.batch_size < 1 or self.il_batch_size < 1:
            raise ValueError("batch sizes must be >= 1")
        if self.T < 0:
            raise ValueError("T must be >= 0")

    def gamma_step(self, sim: SimConfig) -> float:
        return step_discount(self.gamma, sim.dt, sim.robot_v_pref, self.discount_mode)

    def epsilon(self, episode: int) -> float:
        decay = self.eps_decay_frac * self.rl_episodes
        if decay <= 0 or episode >= decay:
            return self.eps_end
        return self.eps_start + (self.eps_end - self.eps_start) * episode / decay


def episode_features(outcome: EpisodeOutcome) -> EpisodeFeatures:
    robots = np.stack([j.robot for j in outcome.trajectory])
    humans = np.stack([j.humans for j in outcome.trajectory])
    r, h = transform_batch(robots, humans)
    return EpisodeFeatures(r, h)


def batch_loss(net: ValueNetwork, entries: list[ReplayEntry], T_window: int) -> Tensor:
    """MSE over whole temporal value vectors; human-count groups weighted by size."""
    total = None
    n = len(entries)
    for robot, humans, targets in gather_windows(entries, T_window):
        loss = T.mse_loss(net.forward(robot, humans), Tensor(targets)) * (robot.shape[0] / n)
        total = loss if total is None else total + loss
    return total


def optimise(net: ValueNetwork, entries: list[ReplayEntry], T_window: int, opt: AdamState) -> float:
    for p in net.params.values():
        p.grad = None
    with Tape() as tape:
        loss = batch_loss(net, entries, T_window)
    T.backward(loss, tape, params=net.params.values())
    adam_step(net.params, opt)
    return loss.item()


# imitation ------------------------------------------------------------------------

def training_world(cfg: TrainConfig, sim: SimConfig, seed: int) -> World:
    return World.from_scenario(ScenarioConfig.from_name(cfg.train_env, cfg.train_crowd, seed=seed), sim)


def collect_demos(cfg: TrainConfig, sim: SimConfig, n: int, seed: int = 0) -> list[EpisodeOutcome]:
    expert = ORCARobot(sim, safety_space=cfg.demo_safety_space)
    return [run_episode(training_world(cfg, sim, DEMO_SEED_BASE + seed * 100_000 + i), expert) for i in range(n)]


def demo_entries(demos: list[EpisodeOutcome], cfg: TrainConfig, gamma_step: float) -> list[ReplayEntry]:
    entries = []
    for d in demos:
        feats = episode_features(d)
        targets = window_targets(assemble_target_values(d.rewards, gamma_step), cfg.T)
        entries.extend(ReplayEntry(feats, k, targets[k]) for k in range(targets.shape[0]))
    return entries


def imitation_learn(
    net: ValueNetwork,
    demos: list[EpisodeOutcome],
    cfg: TrainConfig,
    sim: SimConfig = SimConfig(),
    rng: np.random.Generator | None = None,
    epochs: int | None = None,
    on_epoch: Callable[[int, float], None] | None = None,
) -> list[float]:
    """Regress the network on discounted demo returns; returns the mean loss per epoch."""
    if not demos:
        raise ValueError("imitation learning needs at least one demonstration")
    rng = rng if rng is not None else np.random.default_rng(0)
    epochs = cfg.il_epochs if epochs is None else epochs
    entries = demo_entries(demos, cfg, cfg.gamma_step(sim))
    opt = AdamState(lr=cfg.il_lr)
    curve = []
    for ep in range(epochs):
        order = rng.permutation(len(entries))
        losses = []
        for start in range(0, len(order), cfg.il_batch_size):
            batch = [entries[i] for i in order[start : start + cfg.il_batch_size]]
            losses.append(optimise(net, batch, cfg.T, opt) * len(batch))
        curve.append(float(np.sum(losses) / len(entries)))
        if on_epoch is not None:
            on_epoch(ep, curve[-1])
    return curve


# reinforcement ----------------------------------------------------------------------

@dataclass
class RLState:
    target: ValueNetwork
    buffer: ReplayBuffer
    opt: AdamState
    episode: int = 0


def new_rl_state(net: ValueNetwork, cfg: TrainConfig) -> RLState:
    """Target network starts as a copy of the behaviour network."""
    return RLState(net.copy(), ReplayBuffer(cfg.capacity, cfg.T), AdamState(lr=cfg.rl_lr))


def rl_episode(
    net: ValueNetwork,
    state: RLState,
    world: World,
    cfg: TrainConfig,
    sim: SimConfig,
    rng: np.random.Generator,
) -> dict:
    """Roll out one episode, store bootstrapped targets, optimise, maybe sync the target."""
    gamma_step = cfg.gamma_step(sim)
    eps = cfg.epsilon(state.episode)
    policy = ValuePolicy(net, cfg.T, gamma_step, sim, epsilon=eps, rng=rng)
    outcome = run_episode(world, policy)
    feats = episode_features(outcome)
    wr, wh = episode_windows(feats, cfg.T)
    next_values = state.target.values_np(wr[1:], wh[1:])[:, -1]
    y = bootstrap_targets(outcome.rewards, next_values, gamma_step)
    state.buffer.push_episode(feats, window_targets(y, cfg.T))

    losses = []
    if len(state.buffer) >= cfg.batch_size:
        for _ in range(cfg.train_batches):
            losses.append(optimise(net, state.buffer.sample(cfg.batch_size, rng), cfg.T, state.opt))
    state.episode += 1
    if state.episode % cfg.target_sync == 0:
        state.target.copy_from(net)
    return {
        "episode": state.episode - 1,
        "outcome": outcome.result.value,
        "return": float(assemble_target_values(outcome.rewards, gamma_step)[0]),
        "epsilon": eps,
        "loss": float(np.mean(losses)) if losses else None,
        "steps": outcome.n_steps,
        "elapsed": outcome.elapsed,
    }


def rl_train(
    net: ValueNetwork,
    env_factory: Callable[[int], World],
    cfg: TrainConfig,
    sim: SimConfig = SimConfig(),
    rng: np.random.Generator | None = None,
    state: RLState | None = None,
    episodes: int | None = None,
    imitation_initialized: bool = True,
    on_episode: Callable[[dict], None] | None = None,
) -> tuple[RLState, list[dict]]:
    if not imitation_initialized:
        log.warning("reinforcement learning from a cold start (no imitation phase)")
    rng = rng if rng is not None else np.random.default_rng(0)
    if state is None:
        state = new_rl_state(net, cfg)
    end = cfg.rl_episodes if episodes is None else state.episode + episodes
    records = []
    while state.episode < end:
        rec = rl_episode(net, state, env_factory(state.episode), cfg, sim, rng)
        records.append(rec)
        if on_episode is not None:
            on_episode(rec)
    return state, records


# checkpoint / resume --------------------------------------------------------------

def save_training_state(path, net: ValueNetwork, state: RLState | None, rng: np.random.Generator, meta: dict):
    """Behaviour weights plus everything needed to resume: target, Adam moments, counter, rng."""
    extra = {}
    info = dict(meta)
    info["rng_state"] = rng.bit_generator.state
    if state is not None:
        extra.update({f"target/{k}": v for k, v in state.target.params.items()})
        extra.update({f"adam.m/{k}": v for k, v in state.opt.m.items()})
        extra.update({f"adam.v/{k}": v for k, v in state.opt.v.items()})
        info["rl"] = {
            "episode": state.episode,
            "adam_step": state.opt.step,
            "lr": state.opt.lr,
        }
    return net.save(path, info, extra)


def restore_training_state(
    arrays: dict[str, np.ndarray], meta: dict, net: ValueNetwork, cfg: TrainConfig
) -> tuple[RLState | None, np.random.Generator]:
    """Inverse of :func:`save_training_state`; the replay buffer restarts empty."""
    rng = np.random.default_rng()
    rng.bit_generator.state = meta["rng_state"]
    rl = meta.get("rl")
    if rl is None:
        return None, rng
    target = net.copy()
    target.load_state({k[len("target/"):]: v for k, v in arrays.items() if k.startswith("target/")})
    opt = AdamState(lr=rl["lr"], step=rl["adam_step"])
    opt.m = {k[len("adam.m/"):]: np.array(v) for k, v in arrays.items() if k.startswith("adam.m/")}
    opt.v = {k[len("adam.v/"):]: np.array(v) for k, v in arrays.items() if k.startswith("adam.v/")}
    return RLState(target, ReplayBuffer(cfg.capacity, cfg.T), opt, rl["episode"]), rng
