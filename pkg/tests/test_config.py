import dataclasses

import pytest

from camrl.config import ConfigError, RunConfig, build_config, dump_config, load_config, read_pairs
from camrl.crowdsim.scenarios import ENVIRONMENTS


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_defaults_and_types():
    cfg = build_config({"seed": "3", "train.gamma": "0.8", "model.kind": "lstmrl", "eval.environments": "baseline-circle,dense-square"})
    assert cfg.seed == 3 and cfg.train.gamma == 0.8 and cfg.model.kind == "lstmrl"
    assert cfg.eval.environments == ("baseline-circle", "dense-square")


def test_all_expands():
    assert build_config({"eval.environments": "all"}).eval.environments == ENVIRONMENTS


@pytest.mark.parametrize(
    ("key", "value", "match"),
    [
        ("train.gama", "0.9", "train.gama"),
        ("optim.lr", "1", "optim.lr"),
        ("train.T", "eight", "train.T"),
        ("train.gamma", "1.5", "gamma"),
        ("eval.environments", "moon-base", "moon-base"),
    ],
)
def test_bad_keys_and_values(key, value, match):
    with pytest.raises(ConfigError, match=match):
        build_config({key: value})


def test_include_and_override_order(tmp_path):
    write(tmp_path, "base.cfg", "train.T = 4\nmodel.d_model = 16  # comment\n")
    child = write(tmp_path, "child.cfg", "include = base.cfg\ntrain.T = 2\n")
    cfg = load_config(child, {"seed": "9"})
    assert (cfg.train.T, cfg.model.d_model, cfg.seed) == (2, 16, 9)
    assert read_pairs(child)["train.T"][1].endswith("child.cfg:2")


def test_include_cycle(tmp_path):
    write(tmp_path, "a.cfg", "include = b.cfg\n")
    write(tmp_path, "b.cfg", "include = a.cfg\n")
    with pytest.raises(ConfigError, match="cycle"):
        load_config(tmp_path / "a.cfg")


def test_dump_round_trip_and_hash(tmp_path):
    cfg = build_config({"seed": "5", "train.T": "3", "eval.crowd_models": "sfm"})
    again = load_config(write(tmp_path, "d.cfg", dump_config(cfg)))
    assert again == cfg
    assert again.config_hash() == cfg.config_hash()
    assert cfg.replace(seed=6).config_hash() == cfg.config_hash()
    other = cfg.replace(train=dataclasses.replace(cfg.train, T=4))
    assert other.config_hash() != cfg.config_hash()


def test_shipped_configs_load():
    for name in ("base", "smoke", "desk"):
        assert isinstance(load_config(f"configs/{name}.cfg"), RunConfig)
