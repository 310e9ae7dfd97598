"""Flat ``key = value`` configuration files.

Keys are ``section.field`` where the field name matches a dataclass field
one-to-one (``train.gamma``, ``model.d_model``, ``sim.dt``, ``eval.n_cases``),
plus the top-level ``seed``. ``include = other.cfg`` pulls in another file
(relative to the including one) whose values the later lines override.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import typing
from dataclasses import dataclass, field
from pathlib import Path

from .crowdsim.scenarios import CROWD_MODELS, ENVIRONMENTS
from .crowdsim.state import SimConfig
from .vlearn.networks import ModelConfig
from .vlearn.trainer import TrainConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class EvalConfig:
    environments: tuple[str, ...] = ENVIRONMENTS
    crowd_models: tuple[str, ...] = CROWD_MODELS
    n_cases: int = 50

    def __post_init__(self):
        if tuple(self.environments) == ("all",):
            object.__setattr__(self, "environments", ENVIRONMENTS)
        if tuple(self.crowd_models) == ("all",):
            object.__setattr__(self, "crowd_models", CROWD_MODELS)
        bad = [e for e in self.environments if e not in ENVIRONMENTS]
        if bad:
            raise ValueError(f"unknown environments {bad}")
        bad = [c for c in self.crowd_models if c not in CROWD_MODELS]
        if bad:
            raise ValueError(f"unknown crowd models {bad}")
        if self.n_cases < 1:
            raise ValueError("n_cases must be >= 1")


SECTIONS = {"train": TrainConfig, "model": ModelConfig, "sim": SimConfig, "eval": EvalConfig}


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    train: TrainConfig = field(default_factory=TrainConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    sim: SimConfig = field(default_factory=SimConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def config_hash(self) -> str:
        """sha256 over the canonical JSON of every resolved value (the seed excluded)."""
        d = self.to_dict()
        d.pop("seed")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def stamp(self) -> dict:
        return {"config_hash": self.config_hash(), "seed": self.seed}

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)


def _convert(raw: str, typ, key: str):
    origin = typing.get_origin(typ)
    try:
        if typ is bool:
            low = raw.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return low in ("true", "1", "yes")
        if typ is int:
            return int(raw)
        if typ is float:
            return float(raw)
        if typ is str:
            return raw
        if origin is tuple:
            return tuple(s.strip() for s in raw.split(",") if s.strip())
    except ValueError as err:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {getattr(typ, '__name__', typ)}") from err
    raise ConfigError(f"{key}: unsupported field type {typ}")


def read_pairs(path, _seen: tuple = ()) -> dict[str, tuple[str, str]]:
    """Ordered ``key -> (raw value, origin)`` after resolving includes."""
    path = Path(path).resolve()
    if path in _seen:
        raise ConfigError(f"include cycle through {path}")
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    out: dict[str, tuple[str, str]] = {}
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key == "include":
            out.update(read_pairs(path.parent / value, _seen + (path,)))
        else:
            out[key] = (value, f"{path}:{lineno}")
    return out


def build_config(pairs: dict[str, str]) -> RunConfig:
    values: dict[str, dict] = {s: {} for s in SECTIONS}
    seed = 0
    for key, raw in pairs.items():
        if key == "seed":
            seed = _convert(raw, int, key)
            continue
        section, _, name = key.partition(".")
        cls = SECTIONS.get(section)
        if cls is None:
            raise ConfigError(f"unknown config key {key!r}: section must be one of {sorted(SECTIONS)} or 'seed'")
        hints = typing.get_type_hints(cls)
        if name not in hints:
            raise ConfigError(f"unknown config key {key!r}: {cls.__name__} has no field {name!r}")
        values[section][name] = _convert(raw, hints[name], key)
    try:
        return RunConfig(seed=seed, **{s: SECTIONS[s](**v) for s, v in values.items()})
    except (TypeError, ValueError) as err:
        raise ConfigError(str(err)) from err


def load_config(path=None, overrides: dict[str, str] | None = None) -> RunConfig:
    pairs = {k: v for k, (v, _) in read_pairs(path).items()} if path else {}
    pairs.update(overrides or {})
    return build_config(pairs)


def dump_config(cfg: RunConfig) -> str:
    lines = [f"seed = {cfg.seed}"]
    for section in SECTIONS:
        for f in dataclasses.fields(getattr(cfg, section)):
            v = getattr(getattr(cfg, section), f.name)
            v = ",".join(v) if isinstance(v, tuple) else v
            lines.append(f"{section}.{f.name} = {v}")
    return "\n".join(lines) + "\n"
