from .episode import (
    EpisodeOutcome,
    GoalSeeker,
    ORCARobot,
    Policy,
    read_trajectory_log,
    reward_config_for,
    run_episode,
    write_trajectory_log,
)
from .orca import orca_policy, preferred_velocity
from .scenarios import (
    CROWD_MODELS,
    ENVIRONMENTS,
    GEOMETRY,
    ScenarioConfig,
    ScenarioError,
    spawn_scenario,
)
from .sfm import sfm_acceleration, sfm_policy
from .state import FullAgentState, HiddenState, JointState, ObservableState, SimConfig
from .world import Status, StepEvents, World, check_termination, classify, separation_distance
