"""Value networks over temporal crowd windows.

All three variants map robot rows (M, L, 5) and human rows (M, L, n, 7) to a
value per window position, shape (M, L):

* ``camrl``  GRU crowd encoder -> latent per state -> 4-block Mamba stack over
  the window -> RMS-norm -> linear head.
* ``lstmrl`` LSTM crowd encoder -> MLP head, each position on its own.
* ``cadrl``  no crowd encoder: MLP on (robot row, human row) pairs, value is
  the minimum over humans, each position on its own.
"""
from __future__ import annotations

import copy
from dataclasses import asdict, dataclass

import numpy as np

from ..numerics import tensor as T
from ..numerics.checkpoint import load_params, save_params
from ..numerics.layers import (
    gru_cell,
    gru_cell_np,
    init_gru,
    init_linear,
    init_lstm,
    linear,
    linear_np,
    lstm_cell,
    lstm_cell_np,
    rms_norm,
    rms_norm_np,
)
from ..numerics.tensor import Tensor
from ..ssm import mamba
from .features import HUMAN_FEATS, ROBOT_FEATS

KINDS = ("camrl", "lstmrl", "cadrl")


@dataclass(frozen=True)
class ModelConfig:
    kind: str = "camrl"
    d_model: int = 64
    d_state: int = 16
    expand: int = 2
    d_conv: int = 4
    dt_rank: int = 1
    embed_dim: int = 32
    rnn_hidden: int = 64
    mlp_hidden: int = 100

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown network kind {self.kind!r}; expected one of {KINDS}")

    def mamba(self) -> mamba.MambaConfig:
        return mamba.MambaConfig(self.d_model, self.d_state, self.expand, self.d_conv, self.dt_rank)


def sort_humans(humans: np.ndarray) -> np.ndarray:
    """Order human rows by decreasing distance so the nearest one is read last.

    Equal distances fall back to the remaining features, so the order never
    depends on how the humans were listed.
    """
    if humans.shape[-2] == 0:
        return humans
    keys = [humans[..., k] for k in (6, 4, 3, 2, 1, 0)] + [-humans[..., 5]]
    order = np.lexsort(keys, axis=-1)
    return np.take_along_axis(humans, order[..., None], axis=-2)


class ValueNetwork:
    temporal = False

    def __init__(self, cfg: ModelConfig, rng: np.random.Generator | None = None):
        self.cfg = cfg
        self.params: dict[str, Tensor] = {}
        self._init(rng if rng is not None else np.random.default_rng(0))

    @property
    def kind(self) -> str:
        return self.cfg.kind

    def _init(self, rng: np.random.Generator) -> None:
        raise NotImplementedError

    # evaluation -----------------------------------------------------------------
    def forward(self, robot: np.ndarray, humans: np.ndarray) -> Tensor:
        """Values (M, L) for windows of robot rows (M, L, 5) and human rows (M, L, n, 7)."""
        M, L = robot.shape[:2]
        flat_r = robot.reshape(M * L, ROBOT_FEATS)
        flat_h = humans.reshape(M * L, humans.shape[2], HUMAN_FEATS)
        return self._state_values(flat_r, flat_h).reshape(M, L)

    def _state_values(self, robot: np.ndarray, humans: np.ndarray) -> Tensor:
        raise NotImplementedError

    def values_np(self, robot: np.ndarray, humans: np.ndarray) -> np.ndarray:
        return self.forward(robot, humans).data

    def lookahead(self, prefix_robot, prefix_humans, cand_robot, cand_humans) -> np.ndarray:
        """Final-position value of each window ``prefix + [candidate]``; returns (A,)."""
        return self.values_np(cand_robot[:, None], cand_humans[:, None])[:, 0]

    # parameters -------------------------------------------------------------------
    def copy(self) -> "ValueNetwork":
        other = copy.copy(self)
        other.params = {k: Tensor(v.data.copy(), requires_grad=True) for k, v in self.params.items()}
        return other

    def load_state(self, arrays: dict[str, np.ndarray]) -> None:
        missing = set(self.params) - set(arrays)
        if missing:
            raise KeyError(f"checkpoint lacks parameters: {sorted(missing)[:5]}")
        for k, p in self.params.items():
            if arrays[k].shape != p.shape:
                raise ValueError(f"{k}: checkpoint shape {arrays[k].shape} != {p.shape}")
            p.data = np.array(arrays[k], dtype=np.float64)

    def copy_from(self, other: "ValueNetwork") -> None:
        for k, p in self.params.items():
            p.data = other.params[k].data.copy()

    def n_params(self) -> int:
        return sum(p.size for p in self.params.values())

    def save(self, path, meta: dict | None = None, extra: dict | None = None):
        arrays = dict(self.params)
        if extra:
            arrays.update(extra)
        return save_params(path, arrays, {"model": asdict(self.cfg), **(meta or {})})


class CAMRLNetwork(ValueNetwork):
    temporal = True

    def _init(self, rng):
        c, p = self.cfg, self.params
        init_linear(p, "enc.embed", HUMAN_FEATS, c.embed_dim, rng)
        init_gru(p, "enc.gru", c.embed_dim, c.rnn_hidden, rng)
        init_linear(p, "enc.proj", c.rnn_hidden + ROBOT_FEATS, c.d_model, rng)
        mamba.init_mamba_stack(p, "mamba", c.mamba(), rng)
        p["head.norm.w"] = Tensor(np.ones(c.d_model), requires_grad=True)
        init_linear(p, "head", c.d_model, 1, rng)

    def encode(self, robot: np.ndarray, humans: np.ndarray) -> Tensor:
        """Crowd latent (M, d_model) for M joint states."""
        hs = sort_humans(humans)
        h = Tensor(np.zeros((robot.shape[0], self.cfg.rnn_hidden)))
        for i in range(hs.shape[1]):
            e = T.silu(linear(self.params, "enc.embed", Tensor(hs[:, i])))
            h = gru_cell(self.params, "enc.gru", e, h)
        return linear(self.params, "enc.proj", T.concat([h, Tensor(robot)], axis=-1))

    def encode_np(self, robot: np.ndarray, humans: np.ndarray) -> np.ndarray:
        hs = sort_humans(humans)
        h = np.zeros((robot.shape[0], self.cfg.rnn_hidden))
        for i in range(hs.shape[1]):
            e = linear_np(self.params, "enc.embed", hs[:, i])
            e = e * T.stable_sigmoid(e)
            h = gru_cell_np(self.params, "enc.gru", e, h)
        return linear_np(self.params, "enc.proj", np.concatenate([h, robot], axis=-1))

    def forward(self, robot, humans):
        M, L = robot.shape[:2]
        lat = self.encode(robot.reshape(M * L, ROBOT_FEATS), humans.reshape(M * L, humans.shape[2], HUMAN_FEATS))
        seq = mamba.mamba_stack(self.params, "mamba", lat.reshape(M, L, self.cfg.d_model))
        seq = rms_norm(seq, self.params["head.norm.w"])
        return linear(self.params, "head", seq).reshape(M, L)

    def values_np(self, robot, humans):
        M, L = robot.shape[:2]
        lat = self.encode_np(robot.reshape(M * L, ROBOT_FEATS), humans.reshape(M * L, humans.shape[2], HUMAN_FEATS))
        seq, _ = mamba.mamba_stack_np(self.params, "mamba", lat.reshape(M, L, self.cfg.d_model))
        seq = rms_norm_np(seq, self.params["head.norm.w"].data)
        return linear_np(self.params, "head", seq)[..., 0]

    def _zero_states(self):
        c = self.cfg
        di = c.expand * c.d_model
        return [(np.zeros((1, c.d_conv - 1, di)), np.zeros((1, di, c.d_state))) for _ in range(mamba.N_LAYERS)]

    def lookahead(self, prefix_robot, prefix_humans, cand_robot, cand_humans):
        if prefix_robot.shape[0]:
            lat = self.encode_np(prefix_robot, prefix_humans)
            _, states = mamba.mamba_stack_np(self.params, "mamba", lat[None])
        else:
            states = self._zero_states()
        y, _ = mamba.mamba_stack_step_np(self.params, "mamba", self.encode_np(cand_robot, cand_humans), states)
        y = rms_norm_np(y, self.params["head.norm.w"].data)
        return linear_np(self.params, "head", y)[:, 0]


class LSTMRLNetwork(ValueNetwork):
    def _init(self, rng):
        c, p = self.cfg, self.params
        init_lstm(p, "enc.lstm", HUMAN_FEATS, c.rnn_hidden, rng)
        init_linear(p, "mlp.0", c.rnn_hidden + ROBOT_FEATS, c.mlp_hidden, rng)
        init_linear(p, "mlp.1", c.mlp_hidden, c.mlp_hidden, rng)
        init_linear(p, "head", c.mlp_hidden, 1, rng)

    def _state_values(self, robot, humans):
        hs = sort_humans(humans)
        M = robot.shape[0]
        h = Tensor(np.zeros((M, self.cfg.rnn_hidden)))
        cell = Tensor(np.zeros((M, self.cfg.rnn_hidden)))
        for i in range(hs.shape[1]):
            h, cell = lstm_cell(self.params, "enc.lstm", Tensor(hs[:, i]), h, cell)
        x = T.concat([h, Tensor(robot)], axis=-1)
        x = T.relu(linear(self.params, "mlp.0", x))
        x = T.relu(linear(self.params, "mlp.1", x))
        return linear(self.params, "head", x)[:, 0]

    def values_np(self, robot, humans):
        M, L = robot.shape[:2]
        r = robot.reshape(M * L, ROBOT_FEATS)
        hs = sort_humans(humans.reshape(M * L, humans.shape[2], HUMAN_FEATS))
        h = np.zeros((M * L, self.cfg.rnn_hidden))
        cell = np.zeros_like(h)
        for i in range(hs.shape[1]):
            h, cell = lstm_cell_np(self.params, "enc.lstm", hs[:, i], h, cell)
        x = np.maximum(linear_np(self.params, "mlp.0", np.concatenate([h, r], axis=-1)), 0.0)
        x = np.maximum(linear_np(self.params, "mlp.1", x), 0.0)
        return linear_np(self.params, "head", x)[:, 0].reshape(M, L)


class CADRLNetwork(ValueNetwork):
    def _init(self, rng):
        c, p = self.cfg, self.params
        init_linear(p, "mlp.0", ROBOT_FEATS + HUMAN_FEATS, c.mlp_hidden, rng)
        init_linear(p, "mlp.1", c.mlp_hidden, c.mlp_hidden, rng)
        init_linear(p, "head", c.mlp_hidden, 1, rng)

    @staticmethod
    def _pairs(robot, humans):
        if humans.shape[1] == 0:
            humans = np.zeros((robot.shape[0], 1, HUMAN_FEATS))
        rb = np.broadcast_to(robot[:, None, :], humans.shape[:2] + (ROBOT_FEATS,))
        return np.concatenate([rb, humans], axis=-1)

    def _state_values(self, robot, humans):
        x = Tensor(self._pairs(robot, humans))
        x = T.relu(linear(self.params, "mlp.0", x))
        x = T.relu(linear(self.params, "mlp.1", x))
        v = linear(self.params, "head", x)
        return T.amin(v.reshape(v.shape[0], v.shape[1]), axis=1)

    def values_np(self, robot, humans):
        M, L = robot.shape[:2]
        x = self._pairs(robot.reshape(M * L, ROBOT_FEATS), humans.reshape(M * L, humans.shape[2], HUMAN_FEATS))
        x = np.maximum(linear_np(self.params, "mlp.0", x), 0.0)
        x = np.maximum(linear_np(self.params, "mlp.1", x), 0.0)
        return linear_np(self.params, "head", x)[..., 0].min(axis=1).reshape(M, L)


_CLASSES = {"camrl": CAMRLNetwork, "lstmrl": LSTMRLNetwork, "cadrl": CADRLNetwork}


def make_network(cfg: ModelConfig, rng: np.random.Generator | None = None) -> ValueNetwork:
    return _CLASSES[cfg.kind](cfg, rng)


def load_network(path) -> tuple[ValueNetwork, dict]:
    arrays, meta = load_params(path)
    net = make_network(ModelConfig(**meta["model"]))
    net.load_state(arrays)
    return net, meta
