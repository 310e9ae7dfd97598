"""Held-out evaluation protocol: every (environment, crowd model) cell on seeds 0..n-1."""
from __future__ import annotations

import functools
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from ..crowdsim.episode import ORCARobot, run_episode
from ..crowdsim.scenarios import CROWD_MODELS, ENVIRONMENTS, ScenarioConfig, ScenarioError
from ..crowdsim.state import SimConfig
from ..crowdsim.world import World
from ..vlearn.lookahead import ValuePolicy
from ..vlearn.networks import load_network
from ..vlearn.targets import step_discount
from .metrics import EpisodeSummary, MetricsRecord, compute_metrics

WORKERS_ENV = "CAMRL_WORKERS"
POLICIES = ("orca", "cadrl", "lstmrl", "camrl")
DISPLAY_NAMES = {"orca": "ORCA", "cadrl": "CADRL-MLP", "lstmrl": "LSTMRL", "camrl": "CAMRL"}


@dataclass(frozen=True)
class PolicySpec:
    """Picklable recipe for a policy, so workers can rebuild it."""

    name: str
    checkpoint: str | None = None

    def __post_init__(self):
        if self.name not in POLICIES:
            raise ValueError(f"unknown policy {self.name!r}; expected one of {POLICIES}")
        if self.name != "orca" and self.checkpoint is None:
            raise ValueError(f"policy {self.name!r} needs a checkpoint")

    def build(self, sim: SimConfig):
        if self.name == "orca":
            return ORCARobot(sim)  # invisible-robot ORCA baseline, no safety margin
        net, meta = _load(self.checkpoint)
        if net.kind != self.name:
            raise ValueError(f"checkpoint holds a {net.kind!r} network, not {self.name!r}")
        train = meta.get("train", {})
        gamma_step = step_discount(
            train.get("gamma", 0.9), sim.dt, sim.robot_v_pref, train.get("discount_mode", "normalized")
        )
        return ValuePolicy(net, train.get("T", 8), gamma_step, sim, epsilon=0.0)


@functools.lru_cache(maxsize=8)
def _load(path: str):
    if not Path(path).exists():
        raise FileNotFoundError(f"checkpoint not found: {path}")
    return load_network(path)


@dataclass
class SuiteResult:
    cells: dict[tuple[str, str], list[EpisodeSummary]] = field(default_factory=dict)
    failures: list[dict] = field(default_factory=list)

    def n_episodes(self) -> int:
        return sum(len(v) for v in self.cells.values())

    def cell_metrics(self, r_c: float) -> dict[tuple[str, str], MetricsRecord]:
        return {k: compute_metrics(v, r_c) for k, v in self.cells.items() if v}

    def pooled(self, r_c: float) -> MetricsRecord:
        return compute_metrics([e for v in self.cells.values() for e in v], r_c)


def _run_case(task) -> tuple[str, str, int, EpisodeSummary | str]:
    spec, sim, env, crowd, seed = task
    try:
        world = World.from_scenario(ScenarioConfig.from_name(env, crowd, seed=seed), sim)
    except ScenarioError as err:
        return env, crowd, seed, f"scenario generation failed: {err}"
    outcome = run_episode(world, spec.build(sim))
    return env, crowd, seed, EpisodeSummary.from_outcome(outcome, sim.discomfort_dist, seed)


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        n = int(raw)
    except ValueError as err:
        raise ValueError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from err
    return max(1, n)


def run_suite(
    spec: PolicySpec,
    environments=ENVIRONMENTS,
    crowd_models=CROWD_MODELS,
    n_cases: int = 50,
    sim: SimConfig = SimConfig(),
    workers: int | None = None,
) -> SuiteResult:
    """Seeds ``0..n_cases-1`` in every cell; training uses disjoint seed ranges."""
    if n_cases < 1:
        raise ValueError("n_cases must be >= 1")
    for env in environments:
        if env not in ENVIRONMENTS:
            raise ValueError(f"unknown environment {env!r}")
    tasks = [(spec, sim, e, c, s) for e in environments for c in crowd_models for s in range(n_cases)]
    workers = worker_count() if workers is None else workers
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            done = list(pool.map(_run_case, tasks, chunksize=4))
    else:
        done = [_run_case(t) for t in tasks]
    res = SuiteResult({(e, c): [] for e in environments for c in crowd_models})
    for env, crowd, seed, item in done:  # map keeps task order, so results are deterministic
        if isinstance(item, str):
            res.failures.append({"env": env, "crowd_model": crowd, "seed": seed, "error": item})
        else:
            res.cells[(env, crowd)].append(item)
    return res


def results_records(policy: str, res: SuiteResult, r_c: float, stamp: dict) -> list[dict]:
    """One record per cell plus a pooled record; ``stamp`` carries config hash and seed."""
    recs = []
    for (env, crowd), eps in res.cells.items():
        recs.append(
            {
                "policy": policy,
                "env": env,
                "crowd_model": crowd,
                "metrics": compute_metrics(eps, r_c).to_dict() if eps else None,
                "episodes": [e.to_dict() for e in eps],
                "failures": [f for f in res.failures if f["env"] == env and f["crowd_model"] == crowd],
                **stamp,
            }
        )
    recs.append(
        {"policy": policy, "env": "pooled", "crowd_model": "pooled", "metrics": res.pooled(r_c).to_dict(), **stamp}
    )
    return recs


def write_results(path, records: list[dict]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        for r in records:
            fh.write(json.dumps(r, sort_keys=True) + "\n")
    return path


def read_results(path) -> list[dict]:
    with open(path) as fh:
        return [json.loads(ln) for ln in fh if ln.strip()]


def metrics_from_dict(d: dict) -> MetricsRecord:
    keys = ("n_episodes", "n_success", "n_collision", "n_timeout", "time_mean", "time_std", "disc_freq", "disc_dist_mean", "disc_dist_std")
    return MetricsRecord(**{k: d[k] for k in keys})
