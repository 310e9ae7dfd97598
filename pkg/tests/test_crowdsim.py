import numpy as np
import pytest

from camrl.crowdsim import orca, sfm
from camrl.crowdsim.episode import GoalSeeker, ORCARobot, read_trajectory_log, run_episode, write_trajectory_log
from camrl.crowdsim.scenarios import ENVIRONMENTS, GEOMETRY, ScenarioConfig, spawn_scenario
from camrl.crowdsim.state import SimConfig
from camrl.crowdsim.world import Status, World, check_termination, classify, separation_distance


def agent(px, py, gx, gy, vx=0.0, vy=0.0, r=0.3, v_pref=1.0):
    return np.array([px, py, vx, vy, r, gx, gy, v_pref])


def test_spawn_baseline_circle():
    robot, humans = spawn_scenario(ScenarioConfig("circle", "baseline", seed=0))
    assert humans.shape == (5, 8)
    np.testing.assert_array_equal(robot[[0, 1, 5, 6]], [0.0, -4.0, 0.0, 4.0])
    radii = np.hypot(humans[:, 0], humans[:, 1])
    assert np.all(np.abs(radii - 4.0) < 1.0)
    np.testing.assert_array_equal(humans[:, 5:7], -humans[:, 0:2])


def test_spawn_is_deterministic():
    cfg = ScenarioConfig("square", "dense", seed=11)
    a, b = spawn_scenario(cfg), spawn_scenario(cfg)
    np.testing.assert_array_equal(a[0], b[0])
    np.testing.assert_array_equal(a[1], b[1])


@pytest.mark.parametrize("seed", range(5))
def test_spawn_large_square_region(seed):
    _, humans = spawn_scenario(ScenarioConfig("square", "large", seed=seed))
    assert humans.shape[0] == 20
    assert np.all(np.abs(humans[:, [0, 1, 5, 6]]) <= 7.0)


@pytest.mark.parametrize("env", ENVIRONMENTS)
def test_spawn_clearance(env):
    cfg = ScenarioConfig.from_name(env, seed=3)
    robot, humans = spawn_scenario(cfg)
    pts = np.vstack([robot[None, :2], humans[:, :2]])
    d = np.hypot(*(pts[:, None] - pts[None]).transpose(2, 0, 1))
    np.fill_diagonal(d, np.inf)
    assert d.min() >= 0.6 + 0.2
    assert humans.shape[0] == GEOMETRY[(cfg.density, cfg.shape)][1]


def test_scenario_name_errors():
    with pytest.raises(ValueError):
        ScenarioConfig.from_name("tiny-circle")
    with pytest.raises(ValueError):
        ScenarioConfig.from_name("baseline-circle", crowd_model="boids")


def test_orca_alone_returns_preferred_velocity():
    v = orca.orca_policy(agent(0, 0, 3, 4), [], 0.25)
    np.testing.assert_allclose(v, [0.6, 0.8], atol=1e-12)


def test_orca_far_neighbour_is_inactive():
    v = orca.orca_policy(agent(0, 0, 5, 0), [[0.0, 9.0, 0.0, 0.0, 0.3]], 0.25, time_horizon=5.0)
    np.testing.assert_allclose(v, [1.0, 0.0], atol=1e-12)


def test_orca_head_on_is_mirror_symmetric():
    a = agent(-2, 0.05, 2, 0.05, vx=1.0)
    b = agent(2, -0.05, -2, -0.05, vx=-1.0)
    va = orca.orca_policy(a, [b[:5]], 0.25)
    vb = orca.orca_policy(b, [a[:5]], 0.25)
    assert np.max(np.abs(va + vb)) < 1e-9
    assert abs(va[1]) > 1e-3  # they do swerve


def test_orca_two_agents_keep_apart():
    a = agent(-3, 0.02, 3, 0.02)
    b = agent(3, -0.02, -3, -0.02)
    worst = np.inf
    for _ in range(60):
        va = orca.orca_policy(a, [b[:5]], 0.25)
        vb = orca.orca_policy(b, [a[:5]], 0.25)
        for s, v in ((a, va), (b, vb)):
            s[2:4] = v
            s[0:2] += 0.25 * v
        worst = min(worst, np.hypot(*(a[:2] - b[:2])) - 0.6)
    assert worst > -1e-6
    assert np.hypot(*(a[:2] - a[5:7])) < 0.5


def test_sfm_goal_attraction_magnitude():
    acc = sfm.sfm_acceleration(agent(0, 0, 5, 0), [], tau=0.5, A=2.0, B=0.3)
    np.testing.assert_allclose(acc, [2.0, 0.0])


def test_sfm_at_goal_has_no_force():
    np.testing.assert_array_equal(sfm.sfm_acceleration(agent(1, 1, 1, 1), [], 0.5, 2.0, 0.3), [0.0, 0.0])


def test_sfm_touching_neighbour_repels_with_A():
    me = agent(0, 0, 0, 0)
    acc = sfm.sfm_acceleration(me, [[0.6, 0.0, 0.0, 0.0, 0.3]], 0.5, 2.0, 0.3)
    np.testing.assert_allclose(acc, [-2.0, 0.0], atol=1e-15)


def test_sfm_speed_is_clipped():
    v = sfm.sfm_policy(agent(0, 0, 5, 0, vx=0.9), [[0.35, 0.0, 0.0, 0.0, 0.3]], 0.25)
    assert np.hypot(*v) <= 1.0 + 1e-12


def test_step_moves_lone_robot():
    w = World(agent(0, 0, 5, 0), np.zeros((0, 8)))
    ev = w.step([1.0, 0.0])
    np.testing.assert_allclose(w.robot[:2], [0.25, 0.0])
    assert ev.t == 0.25 and ev.d_t == np.inf and not ev.collision
    w.step([0.0, 0.0])
    np.testing.assert_allclose(w.robot[:2], [0.25, 0.0])


@pytest.mark.parametrize("crowd", ["orca", "sfm"])
def test_humans_ignore_robot(crowd):
    cfg = ScenarioConfig("circle", "dense", crowd, seed=2)
    robot, humans = spawn_scenario(cfg)
    w1 = World(robot, humans, crowd, seed=2)
    w2 = World(robot, humans, crowd, seed=2)
    w2.robot[:2] = humans[0, :2] + 0.1  # sitting on top of a human changes nothing
    for _ in range(30):
        w1.step([0.0, 1.0])
        w2.step([-1.0, 0.0])
        np.testing.assert_array_equal(w1.humans, w2.humans)


def test_separation_distance():
    assert separation_distance(agent(0, 0, 0, 0), [[1.0, 0.0, 0.0, 0.0, 0.3]]) == pytest.approx(0.4)
    assert separation_distance(agent(0, 0, 0, 0), [[0.5, 0.0, 0.0, 0.0, 0.3]]) < 0
    assert separation_distance(agent(0, 0, 0, 0), np.zeros((0, 5))) == np.inf


@pytest.mark.parametrize(
    ("d_t", "goal_dist", "t", "expected"),
    [
        (-0.01, 5.0, 3.0, Status.COLLISION),
        (-0.01, 0.1, 25.0, Status.COLLISION),
        (0.5, 0.2, 3.0, Status.SUCCESS),
        (0.5, 2.0, 25.0, Status.TIMEOUT),
        (0.5, 2.0, 24.75, Status.RUNNING),
    ],
)
def test_classify_priority(d_t, goal_dist, t, expected):
    assert classify(d_t, goal_dist, t, 0.3) is expected


def test_check_termination_on_world():
    w = World(agent(0, 0, 0, 0.2), np.array([agent(3, 0, 3, 0)]))
    assert check_termination(w) is Status.SUCCESS
    w = World(agent(0, 0, 0, 5), np.array([agent(0.5, 0, 3, 0)]))
    assert check_termination(w) is Status.COLLISION
    assert check_termination(World(agent(0, 0, 0, 5), np.zeros((0, 8))), t=25.0) is Status.TIMEOUT


def test_episode_terminates_and_logs_round_trip(tmp_path):
    sim = SimConfig()
    world = World.from_scenario(ScenarioConfig("circle", "baseline", seed=4), sim)
    out = run_episode(world, ORCARobot(sim))
    assert out.result is not Status.RUNNING
    assert len(out.trajectory) == out.n_steps + 1 == len(out.rewards) + 1
    assert out.elapsed == pytest.approx(out.n_steps * sim.dt)
    path = write_trajectory_log(tmp_path / "t.jsonl", out, {"env": "baseline-circle"}, sim.dt)
    header, back = read_trajectory_log(path)
    assert header["env"] == "baseline-circle"
    assert back.result is out.result and back.elapsed == out.elapsed
    np.testing.assert_array_equal(back.trajectory[-1].humans, out.trajectory[-1].humans)


def test_goal_seeker_in_empty_world_succeeds():
    sim = SimConfig()
    out = run_episode(World(agent(0, -4, 0, 4), np.zeros((0, 8)), sim=sim), GoalSeeker())
    assert out.result is Status.SUCCESS
    assert out.rewards[-1] == 1.0
