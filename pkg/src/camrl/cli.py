"""Command line: ``camrl {train,evaluate,rollout,verify}``.

Exit codes: 0 success, 2 configuration error, 3 runtime error, 4 verification failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, dump_config, load_config
from .crowdsim.episode import run_episode, write_trajectory_log
from .crowdsim.scenarios import CROWD_MODELS, ENVIRONMENTS, ScenarioConfig
from .crowdsim.world import World
from .eval import DISPLAY_NAMES, POLICIES, PolicySpec, format_table, render_table, results_records, run_suite, write_results
from .numerics.checkpoint import load_params
from .vlearn.networks import KINDS, ModelConfig, make_network
from .vlearn.trainer import (
    TRAIN_SEED_BASE,
    collect_demos,
    imitation_learn,
    new_rl_state,
    restore_training_state,
    rl_train,
    save_training_state,
    training_world,
)

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_VERIFY = 0, 2, 3, 4

log = logging.getLogger("camrl")


class JsonLines:
    """Single writer for a line-delimited JSON log."""

    def __init__(self, path, append: bool = False):
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        self.fh = open(path, "a" if append else "w")

    def write(self, rec: dict) -> None:
        self.fh.write(json.dumps(rec, sort_keys=True) + "\n")
        self.fh.flush()

    def close(self) -> None:
        self.fh.close()


def _resolve_config(args) -> RunConfig:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    return cfg


def _substream(seed: int, name: str) -> np.random.Generator:
    """Independent named random streams derived from the run seed."""
    tag = {"init": 0, "demos": 1, "imitation": 2, "explore": 3}[name]
    return np.random.default_rng(np.random.SeedSequence([seed, tag]))


# train ------------------------------------------------------------------------------

def cmd_train(args) -> int:
    cfg = _resolve_config(args)
    if args.policy:
        kind = args.policy.lower().replace("cadrl-mlp", "cadrl")
        if kind not in KINDS:
            raise ConfigError(f"cannot train policy {args.policy!r}; trainable kinds are {KINDS}")
        cfg = cfg.replace(model=dataclasses.replace(cfg.model, kind=kind))
    tc, sim = cfg.train, cfg.sim
    out = Path(args.out or f"runs/train-{cfg.model.kind}-seed{cfg.seed}")
    out.mkdir(parents=True, exist_ok=True)
    stamp = cfg.stamp()
    (out / "config.cfg").write_text(f"# config_hash = {stamp['config_hash']}\n" + dump_config(cfg))
    meta = {"train": dataclasses.asdict(tc), "sim": dataclasses.asdict(sim), **stamp}
    ckpt = out / "checkpoint.npz"

    state = None
    resumed = False
    if args.checkpoint:
        arrays, saved = load_params(args.checkpoint)
        net = make_network(ModelConfig(**saved["model"]))
        net.load_state(arrays)
        state, rng = restore_training_state(arrays, saved, net, tc)
        resumed = True
        log.info("resumed from %s at RL episode %d", args.checkpoint, 0 if state is None else state.episode)
    else:
        net = make_network(cfg.model, _substream(cfg.seed, "init"))
        rng = _substream(cfg.seed, "explore")

    if not resumed and tc.il_episodes > 0:
        demos = collect_demos(tc, sim, tc.il_episodes, seed=cfg.seed)
        il_log = JsonLines(out / "il_loss.jsonl")

        def on_epoch(ep, loss):
            il_log.write({"epoch": ep, "loss": loss, **stamp})

        imitation_learn(net, demos, tc, sim, _substream(cfg.seed, "imitation"), on_epoch=on_epoch)
        il_log.close()
        save_training_state(out / "il_checkpoint.npz", net, None, rng, {**meta, "phase": "il"})

    train_log = JsonLines(out / "train_log.jsonl", append=resumed)

    def env_factory(i: int) -> World:
        return training_world(tc, sim, TRAIN_SEED_BASE + cfg.seed * 100_000 + i)

    if state is None:
        state = new_rl_state(net, tc)

    def on_episode(rec):
        train_log.write({**rec, **stamp})
        if (rec["episode"] + 1) % tc.checkpoint_every == 0:
            save_training_state(ckpt, net, state, rng, {**meta, "phase": "rl"})

    state, _ = rl_train(
        net, env_factory, tc, sim, rng, state=state,
        imitation_initialized=resumed or tc.il_episodes > 0, on_episode=on_episode,
    )
    train_log.close()
    save_training_state(ckpt, net, state, rng, {**meta, "phase": "rl"})
    print(json.dumps({"checkpoint": str(ckpt), "episodes": state.episode, **stamp}))
    return EXIT_OK


# evaluate ---------------------------------------------------------------------------

def _split(raw: str | None, allowed, what: str) -> tuple[str, ...] | None:
    if raw is None:
        return None
    if raw == "all":
        return tuple(allowed)
    items = tuple(s.strip() for s in raw.split(",") if s.strip())
    bad = [s for s in items if s not in allowed]
    if bad:
        raise ConfigError(f"unknown {what} {bad}; choose from {list(allowed)}")
    return items


def _policy_name(raw: str) -> str:
    name = raw.strip().lower()
    name = {"cadrl-mlp": "cadrl", "cadrl_mlp": "cadrl"}.get(name, name)
    if name not in POLICIES:
        raise ConfigError(f"unknown policy {raw!r}; choose from {[DISPLAY_NAMES[p] for p in POLICIES]}")
    return name


def _policy_specs(args) -> list[PolicySpec]:
    """``--policy NAME`` (checkpoint from ``--checkpoint``) or repeated ``--policy NAME=PATH``."""
    raw = args.policy or ["orca"]
    specs = []
    for item in raw:
        name, _, path = item.partition("=")
        name = _policy_name(name)
        path = path or (args.checkpoint if name != "orca" else None)
        if name != "orca":
            if not path:
                raise ConfigError(f"policy {name!r} needs a checkpoint (--checkpoint or {name}=PATH)")
            if not Path(path).exists():
                raise FileNotFoundError(f"checkpoint not found: {path}")
        specs.append(PolicySpec(name, path))
    return specs


def cmd_evaluate(args) -> int:
    cfg = _resolve_config(args)
    envs = _split(args.envs, ENVIRONMENTS, "environments") or cfg.eval.environments
    crowds = _split(args.crowd_model, CROWD_MODELS, "crowd models") or cfg.eval.crowd_models
    n_cases = args.cases if args.cases is not None else cfg.eval.n_cases
    if n_cases < 1:
        raise ConfigError("--cases must be >= 1")
    specs = _policy_specs(args)
    out = Path(args.out or "runs/evaluate")
    stamp = cfg.stamp()
    r_c = cfg.sim.discomfort_dist
    records, pooled = [], {}
    for spec in specs:
        res = run_suite(spec, envs, crowds, n_cases, cfg.sim)
        name = DISPLAY_NAMES[spec.name]
        recs = results_records(name, res, r_c, {**stamp, "checkpoint": spec.checkpoint})
        records.extend(recs)
        pooled[name] = res.pooled(r_c)
        log.info("%s: %d episodes, %d generation failures", name, res.n_episodes(), len(res.failures))
    write_results(out / "results.jsonl", records)
    (out / "table.tsv").write_text(render_table(pooled))
    text = format_table(pooled)
    (out / "table.txt").write_text(text)
    print(text, end="")
    return EXIT_OK


# rollout ----------------------------------------------------------------------------

def cmd_rollout(args) -> int:
    cfg = _resolve_config(args)
    env = args.envs or "baseline-circle"
    if env not in ENVIRONMENTS:
        raise ConfigError(f"rollout takes one environment from {list(ENVIRONMENTS)}, got {env!r}")
    crowd = args.crowd_model or "orca"
    if crowd not in CROWD_MODELS:
        raise ConfigError(f"unknown crowd model {crowd!r}")
    if args.policy and len(args.policy) > 1:
        raise ConfigError("rollout takes a single --policy")
    spec = _policy_specs(args)[0]
    world = World.from_scenario(ScenarioConfig.from_name(env, crowd, seed=cfg.seed), cfg.sim)
    outcome = run_episode(world, spec.build(cfg.sim))
    header = {
        "env": env, "crowd_model": crowd, "policy": DISPLAY_NAMES[spec.name], "checkpoint": spec.checkpoint,
        "dt": cfg.sim.dt, **cfg.stamp(),
    }
    path = write_trajectory_log(Path(args.out or "runs/rollout") / "trajectory.jsonl", outcome, header, cfg.sim.dt)
    print(json.dumps({"trajectory": str(path), "result": outcome.result.value, "elapsed": outcome.elapsed}))
    return EXIT_OK


# verify -----------------------------------------------------------------------------

def cmd_verify(args) -> int:
    from . import verify

    cfg = _resolve_config(args)
    vcfg = verify.VerifyConfig(seed=cfg.seed)
    if args.quick:
        vcfg = verify.VerifyConfig(ssm_cases=20, grad_instances=3, reward_cases=10_000, metric_cases=50, invisible_seeds=1, seed=cfg.seed)
    result = verify.run_all(vcfg)
    for rep in result.reports:
        print(rep.line())
    if result.passed:
        print("verify: all suites passed")
        return EXIT_OK
    path = verify.write_failures(Path(args.out or "runs/verify") / "failures.jsonl", result, cfg.stamp())
    names = ", ".join(f"{r.name} ({r.op})" for r in result.failing())
    print(f"verify: FAILED {names}; failing cases written to {path}")
    return EXIT_VERIFY


# entry point ------------------------------------------------------------------------

COMMANDS = {"train": cmd_train, "evaluate": cmd_evaluate, "rollout": cmd_rollout, "verify": cmd_verify}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="camrl", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="mode", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--seed", type=int, help="run seed (overrides the config)")
        p.add_argument("--checkpoint", help="checkpoint to load (train: resume from it)")
        p.add_argument("--out", help="output directory")
        p.add_argument("--policy", action="append", help="ORCA, CADRL-MLP, LSTMRL or CAMRL; NAME=PATH to pair with a checkpoint")
        p.add_argument("--envs", help="comma separated environments, or 'all'")
        p.add_argument("--cases", type=int, help="test cases per environment and crowd model")
        p.add_argument("--crowd-model", help="orca, sfm, comma list or 'all'")
        if name == "verify":
            p.add_argument("--quick", action="store_true", help="fewer random cases per suite")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format='{"level": "%(levelname)s", "logger": "%(name)s", "msg": "%(message)s"}',
    )
    if args.mode == "train" and args.policy and len(args.policy) > 1:
        print("error: train takes a single --policy", file=sys.stderr)
        return EXIT_CONFIG
    if args.mode == "train" and args.policy:
        args.policy = args.policy[0]
    try:
        return COMMANDS[args.mode](args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as err:  # anything else is a runtime failure with its own exit code
        print(f"runtime error: {type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
