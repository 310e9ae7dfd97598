"""Deep V-learning: features, value networks, lookahead control and training."""
from .features import HUMAN_FEATS, ROBOT_FEATS, TemporalCrowdState, transform_batch, transform_state
from .lookahead import ValuePolicy, build_action_space, greedy_index, propagate, select_action
from .networks import KINDS, ModelConfig, ValueNetwork, load_network, make_network
from .replay import ReplayBuffer
from .targets import assemble_target_values, bootstrap_targets, step_discount
from .trainer import TrainConfig, collect_demos, imitation_learn, rl_train

__all__ = [
    "HUMAN_FEATS",
    "KINDS",
    "ModelConfig",
    "ROBOT_FEATS",
    "ReplayBuffer",
    "TemporalCrowdState",
    "TrainConfig",
    "ValueNetwork",
    "ValuePolicy",
    "assemble_target_values",
    "bootstrap_targets",
    "build_action_space",
    "collect_demos",
    "greedy_index",
    "imitation_learn",
    "load_network",
    "make_network",
    "propagate",
    "rl_train",
    "select_action",
    "step_discount",
    "transform_batch",
    "transform_state",
]
