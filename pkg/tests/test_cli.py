"""End-to-end runs of the command line on the smoke configuration."""
import json
from pathlib import Path

import numpy as np
import pytest

from camrl.cli import EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, main
from camrl.numerics.checkpoint import load_params
from camrl.vlearn.networks import load_network

SMOKE = Path(__file__).resolve().parent.parent / "configs" / "smoke.cfg"


def cfg_file(tmp_path, extra=""):
    p = tmp_path / "run.cfg"
    p.write_text(f"include = {SMOKE}\ntrain.il_episodes = 4\ntrain.rl_episodes = 4\ntrain.checkpoint_every = 2\n{extra}")
    return str(p)


def lines(path):
    return [json.loads(x) for x in Path(path).read_text().splitlines()]


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("train")
    cfg = cfg_file(tmp)
    for name in ("a", "b"):
        assert main(["train", "--config", cfg, "--seed", "1", "--out", str(tmp / name)]) == EXIT_OK
    return tmp, cfg


def test_train_writes_loadable_checkpoint(trained):
    tmp, _ = trained
    net, meta = load_network(tmp / "a" / "checkpoint.npz")
    assert net.kind == "camrl" and meta["rl"]["episode"] == 4
    assert len(lines(tmp / "a" / "train_log.jsonl")) == 4
    assert (tmp / "a" / "config.cfg").read_text().startswith("# config_hash = ")


def test_train_is_deterministic(trained):
    tmp, _ = trained
    for log in ("il_loss.jsonl", "train_log.jsonl"):
        assert (tmp / "a" / log).read_text() == (tmp / "b" / log).read_text()
    a, _ = load_params(tmp / "a" / "checkpoint.npz")
    b, _ = load_params(tmp / "b" / "checkpoint.npz")
    assert all(np.array_equal(a[k], b[k]) for k in a)


def test_resume_continues_counter(trained, tmp_path):
    tmp, _ = trained
    out = tmp_path / "resumed"
    out.mkdir()
    (out / "train_log.jsonl").write_text((tmp / "a" / "train_log.jsonl").read_text())
    cfg = cfg_file(tmp_path, "train.rl_episodes = 6\n")
    code = main(["train", "--config", cfg, "--seed", "1", "--checkpoint", str(tmp / "a" / "checkpoint.npz"), "--out", str(out)])
    assert code == EXIT_OK
    assert [r["episode"] for r in lines(out / "train_log.jsonl")] == list(range(6))
    assert not (out / "il_loss.jsonl").exists()
    _, meta = load_params(out / "checkpoint.npz")
    assert meta["rl"]["episode"] == 6


def test_evaluate_counts_and_repeatability(trained, tmp_path):
    tmp, cfg = trained
    ckpt = str(tmp / "a" / "checkpoint.npz")
    args = ["evaluate", "--config", cfg, "--envs", "baseline-circle", "--cases", "5", "--policy", "orca", "--policy", f"camrl={ckpt}"]
    assert main(args + ["--out", str(tmp_path / "e1")]) == EXIT_OK
    assert main(args + ["--out", str(tmp_path / "e2")]) == EXIT_OK
    recs = lines(tmp_path / "e1" / "results.jsonl")
    for policy in ("ORCA", "CAMRL"):
        pooled = [r for r in recs if r["policy"] == policy and r["env"] == "pooled"][0]
        assert pooled["metrics"]["n_episodes"] == 10
    assert (tmp_path / "e1" / "results.jsonl").read_text() == (tmp_path / "e2" / "results.jsonl").read_text()
    assert (tmp_path / "e1" / "table.tsv").read_text().startswith("Policy\tSuccess\tCollision")


def test_rollout_log_and_invisibility(trained, tmp_path, capsys):
    tmp, cfg = trained
    ckpt = str(tmp / "a" / "checkpoint.npz")
    from camrl.crowdsim.episode import read_trajectory_log
    from camrl.crowdsim.world import classify

    runs = {}
    for name, policy in (("orca", ["--policy", "orca"]), ("camrl", ["--policy", f"camrl={ckpt}"])):
        out = tmp_path / name
        assert main(["rollout", "--config", cfg, "--seed", "3", "--out", str(out), *policy]) == EXIT_OK
        header, outcome = read_trajectory_log(out / "trajectory.jsonl")
        assert header["seed"] == 3 and header["env"] == "baseline-circle"
        last = outcome.separations[-1]
        goal = np.hypot(*(outcome.trajectory[-1].robot[0:2] - outcome.trajectory[-1].robot[5:7]))
        assert classify(last, goal, outcome.elapsed, 0.3) is outcome.result
        runs[name] = outcome
    k = min(len(r.trajectory) for r in runs.values())
    for i in range(k):
        np.testing.assert_array_equal(runs["orca"].trajectory[i].humans, runs["camrl"].trajectory[i].humans)


@pytest.mark.parametrize(
    ("argv", "code"),
    [
        (["evaluate", "--policy", "camrl"], EXIT_CONFIG),
        (["evaluate", "--policy", "camrl=/nonexistent.npz"], EXIT_RUNTIME),
        (["evaluate", "--envs", "moon"], EXIT_CONFIG),
        (["train", "--policy", "sarl"], EXIT_CONFIG),
        (["rollout", "--crowd-model", "boids"], EXIT_CONFIG),
    ],
)
def test_exit_codes(argv, code):
    assert main(argv) == code


def test_unknown_config_key_exit_code(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("train.gama = 0.9\n")
    assert main(["verify", "--config", str(bad)]) == EXIT_CONFIG
