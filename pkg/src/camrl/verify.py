"""Self-checks run by ``camrl verify``.

Each suite compares an implementation against an independent oracle on random
cases and reports its worst error; a failing suite names the operation under
test and keeps the offending case so it can be replayed.
"""
from __future__ import annotations

import json
import math
import traceback
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import reward as reward_mod
from .crowdsim import episode as episode_mod
from .crowdsim.scenarios import ENVIRONMENTS, ScenarioConfig
from .crowdsim.state import SimConfig
from .crowdsim.world import World
from .eval import metrics as metrics_mod
from .numerics import layers
from .numerics.gradcheck import grad_check
from .numerics.tensor import Tensor
from .ssm import lti, mamba, selective
from .vlearn.networks import ModelConfig, make_network


@dataclass
class SuiteReport:
    name: str
    op: str
    tol: float
    n_cases: int = 0
    max_error: float = 0.0
    failure: dict | None = None
    error: str | None = None

    @property
    def passed(self) -> bool:
        return self.failure is None and self.error is None and self.max_error <= self.tol

    def update(self, err: float, case: Callable[[], dict]) -> None:
        self.n_cases += 1
        err = float(err) if np.isfinite(err) else math.inf
        if err > self.max_error:
            self.max_error = err
        if err > self.tol and self.failure is None:
            self.failure = {"case_index": self.n_cases - 1, "error": err, **case()}

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        msg = f"{status} {self.name:<16} op={self.op:<24} cases={self.n_cases:<6} max_err={self.max_error:.3e} tol={self.tol:.0e}"
        if self.error:
            msg += f"  error: {self.error}"
        return msg


def _rel(a, b, floor: float = 1e-300) -> float:
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    scale = max(float(np.max(np.abs(b), initial=0.0)), floor)
    return float(np.max(np.abs(a - b), initial=0.0)) / scale


def _tolist(x):
    return np.asarray(x).tolist()


# SSM ----------------------------------------------------------------------------

def suite_ssm_forms(n: int = 100, rng=None) -> SuiteReport:
    rep = SuiteReport("ssm_forms", "ssm_conv_kernel", 1e-8)
    rng = rng or np.random.default_rng(1)
    for _ in range(n):
        N = int(rng.integers(1, 17))
        p = lti.LTISSMParams(
            A=-rng.uniform(0.05, 5.0, N), B=rng.normal(size=N), C=rng.normal(size=N), D=float(rng.normal()),
            dt=float(rng.uniform(0.01, 0.5)),
        )
        u = rng.normal(size=64)
        d = p.discretize()
        y_rec = lti.ssm_recurrent(d, u)
        y_conv = lti.ssm_conv_apply(lti.ssm_conv_kernel(d, 64), u, d.D)
        rep.update(_rel(y_conv, y_rec), lambda: {"A": _tolist(p.A), "B": _tolist(p.B), "C": _tolist(p.C), "D": p.D, "dt": p.dt, "u": _tolist(u)})
    return rep


def suite_zoh(n: int = 100, rng=None) -> SuiteReport:
    rep = SuiteReport("zoh", "discretize_zoh", 1e-12)
    rng = rng or np.random.default_rng(2)
    cases = [(-1.0, 1.0, 1.0)] + [
        (-float(rng.uniform(0.01, 5.0)), float(rng.uniform(1e-3, 1.0)), float(rng.normal())) for _ in range(n - 1)
    ]
    for a, dt, b in cases:
        d = lti.discretize_zoh(np.array([a]), np.array([b]), dt)
        want_a = math.exp(a * dt)
        want_b = math.expm1(a * dt) / a * b  # libm expm1: no cancellation for small a*dt
        err = max(abs(d.A_bar[0] - want_a) / abs(want_a), abs(d.B_bar[0] - want_b) / max(abs(want_b), 1e-300))
        rep.update(err, lambda: {"a": a, "dt": dt, "b": b, "A_bar": float(d.A_bar[0]), "B_bar": float(d.B_bar[0]), "want": [want_a, want_b]})
    return rep


def _lti_selective(d: int, n: int, rng) -> selective.SelectiveSSMParams:
    p = selective.init_selective(d, n, rng)
    p.W_B.data[:] = 0.0
    p.W_C.data[:] = 0.0
    p.dt_down.data[:] = 0.0
    p.b_B.data = rng.normal(size=n)
    p.b_C.data = rng.normal(size=n)
    p.D.data = rng.normal(size=d)
    return p


def suite_selective(n: int = 100, rng=None) -> list[SuiteReport]:
    deg = SuiteReport("selective_lti", "selective_scan", 1e-10)
    par = SuiteReport("associative", "associative_scan", 1e-10)
    rng = rng or np.random.default_rng(3)
    for _ in range(n):
        d, N, L = int(rng.integers(1, 5)), int(rng.integers(1, 9)), int(rng.integers(1, 33))
        p = _lti_selective(d, N, rng)
        x = rng.normal(size=(1, L, d))
        y = selective.selective_scan(p, Tensor(x)).data[0]
        A = -np.exp(p.A_log.data)
        delta = np.logaddexp(0.0, p.dt_bias.data)
        want = np.empty((L, d))
        for c in range(d):
            disc = lti.DiscreteSSMParams(np.exp(delta[c] * A[c]), delta[c] * p.b_B.data, p.b_C.data, float(p.D.data[c]))
            want[:, c] = lti.ssm_recurrent(disc, x[0, :, c])
        deg.update(_rel(y, want), lambda: {"x": _tolist(x), "params": {k: _tolist(v.data) for k, v in p.to_flat("ssm").items()}})

        q = selective.init_selective(d, N, rng, dt_rank=1)
        q.W_B.data = rng.normal(size=q.W_B.shape)
        q.W_C.data = rng.normal(size=q.W_C.shape)
        xs = rng.normal(size=(2, L, d))
        seq = selective.selective_scan(q, Tensor(xs)).data
        assoc = selective.associative_scan_selective(q, xs)
        par.update(_rel(assoc, seq), lambda: {"x": _tolist(xs), "params": {k: _tolist(v.data) for k, v in q.to_flat("ssm").items()}})
    return [deg, par]


# gradients -----------------------------------------------------------------------

def _grad_report(name: str, op: str, n: int, make: Callable, rng, **sample) -> SuiteReport:
    """``sample`` bounds how many coordinates are differenced per instance."""
    rep = SuiteReport(name, op, 1e-4)
    sample = sample or {"max_coords": 12}
    for i in range(n):
        f, xs = make(rng)
        err = grad_check(f, xs, h=1e-4, rng=np.random.default_rng(i), **sample)
        rep.update(err, lambda: {"instance": i})
    return rep


def _linear_case(rng):
    p = {}
    layers.init_linear(p, "l", 4, 3, rng)
    x = Tensor(rng.normal(size=(5, 4)))
    w = Tensor(rng.normal(size=(5, 3)))
    return (lambda *a: (layers.linear(p, "l", x) * w).sum()), [x, *p.values()]


def _gru_case(rng):
    p = {}
    layers.init_gru(p, "g", 3, 4, rng)
    x, h = Tensor(rng.normal(size=(2, 3))), Tensor(rng.normal(size=(2, 4)))
    w = Tensor(rng.normal(size=(2, 4)))
    return (lambda *a: (layers.gru_cell(p, "g", x, h) * w).sum()), [x, h, *p.values()]


def _mamba_case(rng):
    p = {}
    mamba.init_mamba_block(p, "m", mamba.MambaConfig(d_model=4, d_state=3, expand=2, d_conv=4), rng)
    x = Tensor(rng.normal(size=(2, 5, 4)))
    w = Tensor(rng.normal(size=(2, 5, 4)))
    return (lambda *a: (mamba.mamba_block(p, "m", x) * w).sum()), [x, *p.values()]


def _value_case(rng):
    net = make_network(ModelConfig(d_model=8, d_state=4, embed_dim=8, rnn_hidden=8), rng)
    robot = rng.normal(size=(2, 3, 5))
    humans = rng.normal(size=(2, 3, 2, 7))
    humans[..., 5] = np.abs(humans[..., 5]) + np.arange(2)  # distinct distances keep the sort order fixed
    w = Tensor(rng.normal(size=(2, 3)))
    return (lambda *a: (net.forward(robot, humans) * w).sum()), list(net.params.values())


def suite_gradients(n: int = 20, rng=None) -> list[SuiteReport]:
    rng = rng or np.random.default_rng(4)
    return [
        _grad_report("grad_linear", "linear", n, _linear_case, rng),
        _grad_report("grad_gru", "gru_cell", n, _gru_case, rng),
        _grad_report("grad_mamba", "mamba_block", n, _mamba_case, rng),
        # 67 parameter tensors: a shared budget keeps 20 instances within seconds
        _grad_report("grad_value", "value_forward", n, _value_case, rng, max_total=64),
    ]


# reward / metrics / simulator -------------------------------------------------------

def reward_literal(d_t: float, at_goal: bool, t: float, r_c: float = 0.2, dt: float = 0.25, t_max: float = 25.0) -> float:
    if d_t <= 0:
        return -0.25
    elif d_t < r_c:
        return (d_t - r_c) * dt / 2
    elif at_goal:
        return 1.0
    elif t >= t_max:
        return -0.5
    else:
        return 0.0


def suite_reward(n: int = 100_000, rng=None) -> SuiteReport:
    rep = SuiteReport("reward", "compute_reward", 0.0)
    rng = rng or np.random.default_rng(5)
    d = rng.uniform(-0.5, 1.0, n)
    d[:4] = [0.0, 0.2, 0.1999999999999, 0.2000000000001]
    goal = rng.random(n) < 0.3
    t = rng.choice([0.0, 10.0, 24.75, 25.0, 30.0], n)
    t[4:8] = 25.0
    for i in range(n):
        got = reward_mod.compute_reward(float(d[i]), bool(goal[i]), float(t[i]))
        want = reward_literal(float(d[i]), bool(goal[i]), float(t[i]))
        rep.update(0.0 if got == want else math.inf, lambda: {"d_t": float(d[i]), "at_goal": bool(goal[i]), "t": float(t[i]), "got": got, "want": want})
    return rep


def suite_metrics(n: int = 200, rng=None) -> SuiteReport:
    rep = SuiteReport("metrics", "compute_metrics", 0.0)
    rng = rng or np.random.default_rng(6)
    kinds = ("Success", "Collision", "Timeout")
    for _ in range(n):
        k = int(rng.integers(1, 60))
        eps = [
            metrics_mod.EpisodeSummary(kinds[int(rng.integers(3))], float(rng.uniform(5, 25)), int(rng.integers(1, 100)))
            for _ in range(k)
        ]
        m = metrics_mod.compute_metrics(eps)
        ok = sum(m.exact_rates()) == 1 and 0 <= m.success <= 1 and 0 <= m.collision <= 1 and 0 <= m.timeout <= 1
        rep.update(0.0 if ok else math.inf, lambda: {"results": [e.result for e in eps]})
    ratio = metrics_mod.compute_metrics([metrics_mod.EpisodeSummary("Success", 10.0, 40)] * 44 + [metrics_mod.EpisodeSummary("Collision", 3.0, 12)] * 6)
    rep.update(abs(ratio.success - 0.88), lambda: {"success": ratio.success, "want": 0.88})
    return rep


def human_tracks(env: str, crowd: str, seed: int, policy, sim: SimConfig = SimConfig(), steps: int = 40) -> np.ndarray:
    """Human states over a fixed number of steps; episode termination is ignored on purpose."""
    world = World.from_scenario(ScenarioConfig.from_name(env, crowd, seed=seed), sim)
    policy.reset()
    tracks = [world.humans.copy()]
    for _ in range(steps):
        world.step(policy.act(world.joint_state(), world.t))
        tracks.append(world.humans.copy())
    return np.stack(tracks)


def suite_invisible(n_seeds: int = 2, rng=None, crowd_models=("orca", "sfm"), steps: int = 40) -> SuiteReport:
    """Humans must follow the same tracks whatever the robot does."""
    rep = SuiteReport("invisible_robot", "World.step", 0.0)
    sim = SimConfig()
    for env in ENVIRONMENTS:
        for crowd in crowd_models:
            for seed in range(n_seeds):
                a = human_tracks(env, crowd, seed, episode_mod.GoalSeeker(), sim, steps)
                b = human_tracks(env, crowd, seed, _Still(), sim, steps)
                err = 0.0 if np.array_equal(a, b) else float(np.max(np.abs(a - b)))
                rep.update(err, lambda: {"env": env, "crowd_model": crowd, "seed": seed})
    return rep


class _Still:
    def reset(self):
        pass

    def act(self, joint, t):
        return np.zeros(2)


# driver ----------------------------------------------------------------------------

@dataclass
class VerifyConfig:
    ssm_cases: int = 100
    grad_instances: int = 20
    reward_cases: int = 100_000
    metric_cases: int = 200
    invisible_seeds: int = 2
    seed: int = 0


@dataclass
class VerifyResult:
    reports: list[SuiteReport] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.reports)

    def failing(self) -> list[SuiteReport]:
        return [r for r in self.reports if not r.passed]


def _guard(name: str, op: str, tol: float, fn: Callable) -> list[SuiteReport]:
    try:
        out = fn()
        return out if isinstance(out, list) else [out]
    except Exception as err:  # a crash inside a suite is a failure of the op under test
        tb = traceback.format_exception_only(type(err), err)[-1].strip()
        return [SuiteReport(name, op, tol, max_error=math.inf, error=tb)]


def run_all(cfg: VerifyConfig = VerifyConfig()) -> VerifyResult:
    ss = np.random.SeedSequence(cfg.seed).spawn(7)
    rngs = [np.random.default_rng(s) for s in ss]
    res = VerifyResult()
    res.reports += _guard("ssm_forms", "ssm_conv_kernel", 1e-8, lambda: suite_ssm_forms(cfg.ssm_cases, rngs[0]))
    res.reports += _guard("zoh", "discretize_zoh", 1e-12, lambda: suite_zoh(cfg.ssm_cases, rngs[1]))
    res.reports += _guard("selective", "selective_scan", 1e-10, lambda: suite_selective(cfg.ssm_cases, rngs[2]))
    res.reports += _guard("gradients", "grad_check", 1e-4, lambda: suite_gradients(cfg.grad_instances, rngs[3]))
    res.reports += _guard("reward", "compute_reward", 0.0, lambda: suite_reward(cfg.reward_cases, rngs[4]))
    res.reports += _guard("metrics", "compute_metrics", 0.0, lambda: suite_metrics(cfg.metric_cases, rngs[5]))
    res.reports += _guard("invisible_robot", "World.step", 0.0, lambda: suite_invisible(cfg.invisible_seeds, rngs[6]))
    return res


def write_failures(path, result: VerifyResult, stamp: dict | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        for r in result.failing():
            fh.write(json.dumps({**asdict(r), **(stamp or {})}, default=float) + "\n")
    return path
