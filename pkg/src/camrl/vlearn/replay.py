"""FIFO replay memory of (window, target value vector) pairs.

Per-episode feature arrays are stored once; entries point into them by step
index, so a window of T+1 states costs no copies until sampled.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .targets import window_indices


@dataclass
class EpisodeFeatures:
    robot: np.ndarray  # (S, 5)
    humans: np.ndarray  # (S, n, 7)

    @property
    def n_humans(self) -> int:
        return self.humans.shape[1]


@dataclass
class ReplayEntry:
    episode: EpisodeFeatures
    step: int
    target: np.ndarray  # (T+1,)


class ReplayBuffer:
    def __init__(self, capacity: int, T: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.T = T
        self.entries: deque[ReplayEntry] = deque(maxlen=capacity)

    def __len__(self) -> int:
        return len(self.entries)

    def push_episode(self, feats: EpisodeFeatures, targets: np.ndarray) -> None:
        """``targets`` is (S, T+1), one row per stored step."""
        for k in range(targets.shape[0]):
            self.entries.append(ReplayEntry(feats, k, targets[k]))

    def sample(self, batch_size: int, rng: np.random.Generator) -> list[ReplayEntry]:
        idx = rng.integers(len(self.entries), size=batch_size)
        return [self.entries[i] for i in idx]


def gather_windows(entries: list[ReplayEntry], T: int):
    """Group sampled entries by human count; yields (robot, humans, targets) stacks."""
    groups: dict[int, list[ReplayEntry]] = {}
    for e in entries:
        groups.setdefault(e.episode.n_humans, []).append(e)
    offsets = np.arange(-T, 1)
    for _, group in sorted(groups.items()):
        robot = np.stack([e.episode.robot[np.maximum(e.step + offsets, 0)] for e in group])
        humans = np.stack([e.episode.humans[np.maximum(e.step + offsets, 0)] for e in group])
        targets = np.stack([e.target for e in group])
        yield robot, humans, targets


def episode_windows(feats: EpisodeFeatures, T: int) -> tuple[np.ndarray, np.ndarray]:
    idx = window_indices(feats.robot.shape[0], T)
    return feats.robot[idx], feats.humans[idx]
