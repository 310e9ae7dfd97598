import logging

import numpy as np
import pytest

from camrl.crowdsim.state import JointState, SimConfig
from camrl.crowdsim.world import World
from camrl.reward import RewardConfig
from camrl.vlearn.features import TemporalCrowdState, to_world_frame, transform_batch, transform_state
from camrl.vlearn.lookahead import build_action_space, greedy_index, propagate, select_action
from camrl.vlearn.networks import ModelConfig, make_network
from camrl.vlearn.replay import EpisodeFeatures, ReplayBuffer
from camrl.vlearn.targets import assemble_target_values, bootstrap_targets, step_discount, window_targets
from camrl.vlearn.trainer import TrainConfig, collect_demos, imitation_learn, rl_train

from conftest import TINY


def joint(robot_xy=(0.0, 0.0), goal=(4.0, 0.0), humans=()):
    robot = np.array([*robot_xy, 0.1, -0.2, 0.3, *goal, 1.0])
    h = np.array(humans, dtype=float).reshape(-1, 5)
    return JointState(robot, h)


def rotate(js, theta):
    c, s = np.cos(theta), np.sin(theta)
    R = np.array([[c, -s], [s, c]])
    r = js.robot.copy()
    r[0:2], r[2:4], r[5:7] = R @ r[0:2], R @ r[2:4], R @ r[5:7]
    h = js.humans.copy()
    h[:, 0:2] = h[:, 0:2] @ R.T
    h[:, 2:4] = h[:, 2:4] @ R.T
    return JointState(r, h)


HUMANS = [[1.0, 0.5, -0.3, 0.2, 0.3], [2.0, -1.0, 0.0, 0.5, 0.25], [-1.0, 2.0, 0.7, 0.0, 0.3]]


def test_transform_identity_when_goal_on_x_axis():
    r, h = transform_state(joint(humans=HUMANS))
    np.testing.assert_allclose(h[:, 0:2], np.array(HUMANS)[:, 0:2], atol=1e-15)
    np.testing.assert_allclose(r, [4.0, 1.0, 0.1, -0.2, 0.3], atol=1e-15)


@pytest.mark.parametrize("theta", [0.3, 1.9, -2.7, np.pi])
def test_transform_rotation_invariant(theta):
    js = joint((0.5, -1.0), (3.0, 2.0), HUMANS)
    a = transform_state(js)
    b = transform_state(rotate(js, theta))
    for x, y in zip(a, b):
        assert np.max(np.abs(x - y)) < 1e-10


def test_transform_zero_humans():
    r, h = transform_state(joint())
    assert r.shape == (5,) and h.shape == (0, 7)


def _window_feats(js_list):
    r, h = TemporalCrowdState(js_list).features()
    return r[None], h[None]


@pytest.mark.parametrize("n", [0, 1, 5, 20])
def test_encoder_fixed_length(tiny_net, n, rng):
    humans = np.column_stack([rng.normal(size=(n, 4)) * 3, np.full(n, 0.3)])
    r, h = transform_state(joint(humans=humans))
    lat = tiny_net.encode_np(r[None], h[None])
    assert lat.shape == (1, TINY["d_model"])
    assert np.all(np.isfinite(lat))


def test_encoder_permutation_invariant(tiny_net):
    r, h = transform_state(joint(humans=HUMANS))
    a = tiny_net.encode_np(r[None], h[None])
    b = tiny_net.encode_np(r[None], h[None, ::-1])
    np.testing.assert_array_equal(a, b)


def test_value_static_window_is_finite(tiny_net):
    js = joint(humans=HUMANS)
    v = tiny_net.values_np(*_window_feats([js] * 9))
    assert v.shape == (1, 9) and np.all(np.isfinite(v))


def test_value_causal_over_window(tiny_net):
    base = [joint((0.1 * k, 0.0), humans=HUMANS) for k in range(6)]
    r, h = _window_feats(base)
    v = tiny_net.forward(r, h).data
    moved = list(base)
    moved[3] = joint((5.0, 5.0), humans=HUMANS)
    v2 = tiny_net.forward(*_window_feats(moved)).data
    np.testing.assert_array_equal(v[0, :3], v2[0, :3])
    assert np.all(v[0, 3:] != v2[0, 3:])


def test_value_single_state_window(tiny_net):
    assert tiny_net.values_np(*_window_feats([joint(humans=HUMANS)])).shape == (1, 1)


@pytest.mark.parametrize("kind", ["camrl", "lstmrl", "cadrl"])
def test_taped_and_numpy_values_agree(kind, rng):
    net = make_network(ModelConfig(kind=kind, **TINY), rng)
    r, h = _window_feats([joint((0.1 * k, 0.0), humans=HUMANS) for k in range(4)])
    np.testing.assert_allclose(net.forward(r, h).data, net.values_np(r, h), atol=1e-12)


def test_lookahead_matches_full_forward(tiny_net):
    prefix = [joint((0.1 * k, 0.0), humans=HUMANS) for k in range(3)]
    cands = [joint((0.5, y), humans=HUMANS) for y in (-0.2, 0.0, 0.3)]
    pr, ph = TemporalCrowdState(prefix).features()
    cr, ch = transform_batch(np.stack([c.robot for c in cands]), np.stack([c.humans for c in cands]))
    got = tiny_net.lookahead(pr, ph, cr, ch)
    for i, c in enumerate(cands):
        want = tiny_net.values_np(*_window_feats(prefix + [c]))[0, -1]
        assert abs(got[i] - want) < 1e-12


def test_action_space_shape_speed_and_reflection():
    acts = build_action_space(1.0)
    assert acts.shape == (81, 2)
    assert np.max(np.hypot(acts[:, 0], acts[:, 1])) == pytest.approx(1.0)
    mirrored = acts * [1.0, -1.0]
    key = lambda a: sorted(map(tuple, np.round(a, 12)))
    assert key(acts) == key(mirrored)


def test_propagate_kinematics():
    js = joint(humans=[[1.0, 0.0, 0.0, 1.0, 0.3]])
    nxt = propagate(js, [0.0, 0.0], 0.25)
    np.testing.assert_allclose(nxt.humans[0, :2], [1.0, 0.25])
    np.testing.assert_array_equal(nxt.robot[:2], js.robot[:2])
    still = joint(humans=[[1.0, 0.0, 0.0, 0.0, 0.3]])
    nxt = propagate(still, [1.0, 0.0], 0.25)
    np.testing.assert_array_equal(nxt.humans, still.humans)
    np.testing.assert_allclose(nxt.robot[:2], [0.25, 0.0])


class GoalDistanceValue:
    """Stand-in network whose value is minus the distance to goal."""

    def lookahead(self, pr, ph, cr, ch):
        return -cr[:, 0]


def test_greedy_picks_full_speed_toward_goal():
    acts = build_action_space(1.0)
    window = TemporalCrowdState([joint((1.0, 1.0), (4.0, 5.0))])
    idx, vel = select_action(GoalDistanceValue(), window, 0.0, acts, 0.9, 0.25, 0.0, RewardConfig(), np.random.default_rng(0))
    scores = [-np.hypot(*(np.array([4.0, 5.0]) - (np.array([1.0, 1.0]) + 0.25 * to_world_frame(a, window.current.robot)))) for a in acts]
    assert idx == int(np.argmax(scores))
    np.testing.assert_allclose(vel, [0.6, 0.8], atol=1e-12)


def test_epsilon_one_is_seeded_uniform():
    acts = build_action_space(1.0)
    window = TemporalCrowdState([joint()])
    picks = [
        select_action(GoalDistanceValue(), window, 1.0, acts, 0.9, 0.25, 0.0, RewardConfig(), np.random.default_rng(s))[0]
        for s in range(400)
    ]
    again = [
        select_action(GoalDistanceValue(), window, 1.0, acts, 0.9, 0.25, 0.0, RewardConfig(), np.random.default_rng(s))[0]
        for s in range(400)
    ]
    assert picks == again
    assert len(set(picks)) > 60


def test_ties_go_to_lowest_index():
    assert greedy_index(np.array([0.1, 0.5, 0.5, 0.2])) == 1


def test_front_padding_repeats_first_state():
    a, b = joint((0.0, 0.0)), joint((1.0, 0.0))
    w = TemporalCrowdState.from_history([a, b], 3)
    assert w.window == [a, a, a, b]


@pytest.mark.parametrize(
    ("rewards", "g", "expected"),
    [([1.0], 0.9, [1.0]), ([0.0, 0.0, 1.0], 0.9, [0.81, 0.9, 1.0]), ([0.0] * 4, 0.9, [0.0] * 4)],
)
def test_assemble_targets(rewards, g, expected):
    np.testing.assert_allclose(assemble_target_values(rewards, g), expected, rtol=1e-15)


def test_bootstrap_targets_terminal_last_step():
    y = bootstrap_targets([0.0, 0.0, 1.0], [2.0, 3.0, 99.0], 0.5)
    np.testing.assert_array_equal(y, [1.0, 1.5, 1.0])


def test_step_discount_modes():
    assert step_discount(0.9, 0.25, 1.0) == 0.9**0.25
    assert step_discount(0.9, 0.25, 1.0, "per_step") == 0.9
    with pytest.raises(ValueError):
        step_discount(1.0, 0.25, 1.0)


def test_window_targets_front_padding():
    np.testing.assert_array_equal(window_targets(np.array([1.0, 2.0, 3.0]), 2), [[1, 1, 1], [1, 1, 2], [1, 2, 3]])


def test_replay_is_fifo():
    buf = ReplayBuffer(capacity=5, T=0)
    feats = EpisodeFeatures(np.zeros((8, 5)), np.zeros((8, 0, 7)))
    buf.push_episode(feats, np.arange(8.0)[:, None])
    assert len(buf) == 5
    assert [e.target[0] for e in buf.entries] == [3.0, 4.0, 5.0, 6.0, 7.0]


def test_epsilon_schedule():
    cfg = TrainConfig(rl_episodes=100)
    assert cfg.epsilon(0) == 0.5
    assert cfg.epsilon(20) == pytest.approx(0.3)
    assert cfg.epsilon(40) == 0.1 == cfg.epsilon(99)


SMALL = TrainConfig(T=2, il_batch_size=16, batch_size=8, train_batches=2, capacity=500, rl_episodes=3, il_epochs=1)


def test_imitation_zero_epochs_changes_nothing(tiny_net):
    demos = collect_demos(SMALL, SimConfig(), 1)
    before = {k: p.data.copy() for k, p in tiny_net.params.items()}
    assert imitation_learn(tiny_net, demos, SMALL, epochs=0) == []
    for k, p in tiny_net.params.items():
        np.testing.assert_array_equal(p.data, before[k])


def test_imitation_needs_demos(tiny_net):
    with pytest.raises(ValueError):
        imitation_learn(tiny_net, [], SMALL)


def test_imitation_fits_constant_target():
    from camrl.crowdsim.episode import EpisodeOutcome
    from camrl.crowdsim.world import Status

    js = joint(humans=HUMANS)
    # with gamma = 0 every target equals its reward, here a constant 0.3
    demo = EpisodeOutcome(Status.TIMEOUT, 2.0, [js] * 9, [np.zeros(2)] * 8, [0.3] * 8)
    cfg = TrainConfig(T=2, gamma=0.0, il_lr=1e-2, il_batch_size=8)
    net = make_network(ModelConfig(**TINY), np.random.default_rng(3))
    curve = imitation_learn(net, [demo], cfg, epochs=300)
    assert curve[-1] < 1e-3


def _short_world(i):
    robot = np.array([0.0, -1.0, 0.0, 0.0, 0.3, 0.0, 1.0, 1.0])
    human = np.array([[3.0, 0.0, 0.0, 0.0, 0.3, -3.0, 0.0, 1.0]])
    return World(robot, human, "orca", SimConfig(time_limit=3.0), seed=i)


def test_rl_target_tracks_behaviour_when_synced_every_episode(tiny_net):
    cfg = TrainConfig(T=2, batch_size=4, train_batches=2, capacity=200, rl_episodes=3, target_sync=1)
    seen = []

    def check(rec):
        for k, p in tiny_net.params.items():
            np.testing.assert_array_equal(state_ref[0].target.params[k].data, p.data)
        seen.append(rec["episode"])

    from camrl.vlearn.trainer import new_rl_state

    state_ref = [new_rl_state(tiny_net, cfg)]
    state, recs = rl_train(tiny_net, _short_world, cfg, SimConfig(time_limit=3.0), state=state_ref[0], on_episode=check)
    assert seen == [0, 1, 2] and state.episode == 3
    assert any(r["loss"] is not None for r in recs)


def test_rl_cold_start_warns(tiny_net, caplog):
    cfg = TrainConfig(T=1, batch_size=4, train_batches=1, capacity=100, rl_episodes=1)
    with caplog.at_level(logging.WARNING):
        rl_train(tiny_net, _short_world, cfg, SimConfig(time_limit=3.0), imitation_initialized=False)
    assert "cold start" in caplog.text
