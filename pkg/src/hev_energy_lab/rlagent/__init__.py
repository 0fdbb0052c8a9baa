from hev_energy_lab.rlagent.env import (
    HevEnv,
    StepOutcome,
    action_to_ef,
    action_to_engine_power,
    build_conventional_state,
    build_state,
    env_step_conventional,
    env_step_rlecms,
    reward,
)
from hev_energy_lab.rlagent.replay import Batch, Experience, ReplayBuffer
from hev_energy_lab.rlagent.td3 import (
    AgentNetworks,
    Hyperparameters,
    compute_td_targets,
    create_agent,
    soft_update,
    td3_update,
)
from hev_energy_lab.rlagent.trainer import (
    PolicyController,
    PolicyMetrics,
    TrainingResult,
    engine_power_fluctuation,
    evaluate_policy,
    load_policy,
    make_env,
    save_policy,
    train,
)

__all__ = [
    "AgentNetworks",
    "Batch",
    "Experience",
    "HevEnv",
    "Hyperparameters",
    "PolicyController",
    "PolicyMetrics",
    "ReplayBuffer",
    "StepOutcome",
    "TrainingResult",
    "action_to_ef",
    "action_to_engine_power",
    "build_conventional_state",
    "build_state",
    "compute_td_targets",
    "create_agent",
    "engine_power_fluctuation",
    "env_step_conventional",
    "env_step_rlecms",
    "evaluate_policy",
    "load_policy",
    "make_env",
    "reward",
    "save_policy",
    "soft_update",
    "td3_update",
    "train",
]
