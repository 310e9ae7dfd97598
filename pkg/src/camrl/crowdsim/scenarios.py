"""Circle- and square-crossing scenario generators (baseline / dense / large)."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .state import SimConfig

SHAPES = ("circle", "square")
DENSITIES = ("baseline", "dense", "large")
CROWD_MODELS = ("orca", "sfm")

# (density, shape) -> (circle radius or square width in m, number of humans)
GEOMETRY = {
    ("baseline", "circle"): (4.0, 5),
    ("baseline", "square"): (10.0, 10),
    ("dense", "circle"): (4.0, 10),
    ("dense", "square"): (10.0, 20),
    ("large", "circle"): (6.0, 12),
    ("large", "square"): (14.0, 20),
}

ENVIRONMENTS = tuple(f"{d}-{s}" for d in DENSITIES for s in SHAPES)


class ScenarioError(RuntimeError):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    shape: str = "circle"
    density: str = "baseline"
    crowd_model: str = "orca"
    seed: int = 0
    size: float = field(default=0.0)
    human_num: int = -1

    def __post_init__(self):
        if self.shape not in SHAPES or self.density not in DENSITIES:
            raise ValueError(f"unknown scenario {self.density}-{self.shape}")
        if self.crowd_model not in CROWD_MODELS:
            raise ValueError(f"unknown crowd model {self.crowd_model!r}")
        size, n = GEOMETRY[(self.density, self.shape)]
        if self.size <= 0:
            object.__setattr__(self, "size", size)
        if self.human_num < 0:
            object.__setattr__(self, "human_num", n)

    @property
    def name(self) -> str:
        return f"{self.density}-{self.shape}"

    @classmethod
    def from_name(cls, env: str, crowd_model: str = "orca", seed: int = 0) -> "ScenarioConfig":
        try:
            density, shape = env.split("-")
        except ValueError:
            raise ValueError(f"environment names look like 'baseline-circle', got {env!r}") from None
        return cls(shape=shape, density=density, crowd_model=crowd_model, seed=seed)


def scenario_rng(cfg: ScenarioConfig) -> np.random.Generator:
    # crowd model is left out on purpose: ORCA and SFM runs share initial layouts
    ss = np.random.SeedSequence([int(cfg.seed), SHAPES.index(cfg.shape), DENSITIES.index(cfg.density)])
    return np.random.default_rng(ss)


def robot_start_goal(cfg: ScenarioConfig) -> tuple[np.ndarray, np.ndarray]:
    half = cfg.size if cfg.shape == "circle" else cfg.size / 2
    return np.array([0.0, -half]), np.array([0.0, half])


def spawn_scenario(cfg: ScenarioConfig, sim: SimConfig = SimConfig()) -> tuple[np.ndarray, np.ndarray]:
    """Initial robot full state (8,) and human full states (n, 8)."""
    rng = scenario_rng(cfg)
    start, goal = robot_start_goal(cfg)
    robot = np.array([*start, 0.0, 0.0, sim.robot_radius, *goal, sim.robot_v_pref])
    starts = [start]
    goals = [goal]
    radii = [sim.robot_radius]
    r = sim.human_radius
    humans = []
    for i in range(cfg.human_num):
        for _ in range(sim.spawn_retries):
            p, g = _sample_human(cfg, rng, sim.human_v_pref)
            ok = True
            for q, qg, qr in zip(starts, goals, radii):
                clear = r + qr + sim.discomfort_dist
                if np.hypot(*(p - q)) < clear or np.hypot(*(g - qg)) < clear:
                    ok = False
                    break
            if ok:
                break
        else:
            raise ScenarioError(f"could not place human {i} in {cfg.name} (seed {cfg.seed})")
        starts.append(p)
        goals.append(g)
        radii.append(r)
        humans.append([*p, 0.0, 0.0, r, *g, sim.human_v_pref])
    return robot, np.array(humans, dtype=np.float64).reshape(-1, 8)


def _sample_human(cfg: ScenarioConfig, rng: np.random.Generator, v_pref: float):
    if cfg.shape == "circle":
        angle = rng.random() * 2 * np.pi
        noise = (rng.random(2) - 0.5) * v_pref
        p = cfg.size * np.array([np.cos(angle), np.sin(angle)]) + noise
        return p, -p
    w = cfg.size
    side = 1.0 if rng.random() > 0.5 else -1.0
    p = np.array([side * rng.random() * w / 2, (rng.random() - 0.5) * w])
    g = np.array([-side * rng.random() * w / 2, (rng.random() - 0.5) * w])
    return p, g
