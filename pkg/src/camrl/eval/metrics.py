"""Navigation metrics over a set of episodes."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from ..crowdsim.episode import EpisodeOutcome
from ..crowdsim.world import Status


@dataclass(frozen=True)
class EpisodeSummary:
    """What the metrics need from one episode, small enough to store in results files."""

    result: str
    elapsed: float
    n_steps: int
    discomfort: tuple[float, ...] = ()  # d_t of every step with 0 < d_t < r_c
    seed: int | None = None

    @classmethod
    def from_outcome(cls, outcome: EpisodeOutcome, discomfort_dist: float, seed: int | None = None) -> "EpisodeSummary":
        disc = tuple(float(d) for d in outcome.separations if 0.0 < d < discomfort_dist)
        return cls(Status(outcome.result).value, float(outcome.elapsed), outcome.n_steps, disc, seed)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["discomfort"] = list(self.discomfort)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "EpisodeSummary":
        return cls(d["result"], d["elapsed"], d["n_steps"], tuple(d.get("discomfort", ())), d.get("seed"))


@dataclass(frozen=True)
class MetricsRecord:
    n_episodes: int
    n_success: int
    n_collision: int
    n_timeout: int
    time_mean: float | None  # successes only
    time_std: float | None
    disc_freq: float
    disc_dist_mean: float | None  # mean d_t over discomfort steps; None when there are none
    disc_dist_std: float | None
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.n_success + self.n_collision + self.n_timeout != self.n_episodes:
            raise ValueError("outcome counts must add up to the episode count")

    def exact_rates(self) -> tuple[Fraction, Fraction, Fraction]:
        n = self.n_episodes
        return Fraction(self.n_success, n), Fraction(self.n_collision, n), Fraction(self.n_timeout, n)

    @property
    def success(self) -> float:
        return self.n_success / self.n_episodes

    @property
    def collision(self) -> float:
        return self.n_collision / self.n_episodes

    @property
    def timeout(self) -> float:
        return self.n_timeout / self.n_episodes

    def to_dict(self) -> dict:
        return {
            "n_episodes": self.n_episodes,
            "n_success": self.n_success,
            "n_collision": self.n_collision,
            "n_timeout": self.n_timeout,
            "success": self.success,
            "collision": self.collision,
            "timeout": self.timeout,
            "time_mean": self.time_mean,
            "time_std": self.time_std,
            "disc_freq": self.disc_freq,
            "disc_dist_mean": self.disc_dist_mean,
            "disc_dist_std": self.disc_dist_std,
        }


def _summary(x, r_c: float) -> EpisodeSummary:
    return x if isinstance(x, EpisodeSummary) else EpisodeSummary.from_outcome(x, r_c)


def compute_metrics(outcomes, discomfort_dist: float = 0.2) -> MetricsRecord:
    """Accepts :class:`EpisodeOutcome` or :class:`EpisodeSummary` items."""
    eps = [_summary(o, discomfort_dist) for o in outcomes]
    if not eps:
        raise ValueError("compute_metrics needs at least one episode")
    counts = {s.value: 0 for s in (Status.SUCCESS, Status.COLLISION, Status.TIMEOUT)}
    for e in eps:
        if e.result not in counts:
            raise ValueError(f"episode did not terminate: {e.result!r}")
        counts[e.result] += 1
    times = np.array([e.elapsed for e in eps if e.result == Status.SUCCESS.value])
    disc = np.array([d for e in eps for d in e.discomfort])
    total_steps = sum(e.n_steps for e in eps)
    return MetricsRecord(
        n_episodes=len(eps),
        n_success=counts[Status.SUCCESS.value],
        n_collision=counts[Status.COLLISION.value],
        n_timeout=counts[Status.TIMEOUT.value],
        time_mean=float(times.mean()) if times.size else None,
        time_std=float(times.std()) if times.size else None,
        disc_freq=disc.size / total_steps if total_steps else 0.0,
        disc_dist_mean=float(disc.mean()) if disc.size else None,
        disc_dist_std=float(disc.std()) if disc.size else None,
    )
