"""
Run configuration: one dataclass per module plus TOML loading and hashing.
"""

from .loader import config_hash, config_to_dict, load_run_config
from .settings import (
    CloudGenConfig,
    DataGenConfig,
    EvalConfig,
    GraspOracleConfig,
    NetsConfig,
    PlannerConfig,
    RunConfig,
    SceneSimConfig,
    TrainConfig,
)

__all__ = [
    "SceneSimConfig",
    "GraspOracleConfig",
    "CloudGenConfig",
    "NetsConfig",
    "TrainConfig",
    "DataGenConfig",
    "PlannerConfig",
    "EvalConfig",
    "RunConfig",
    "load_run_config",
    "config_hash",
    "config_to_dict",
]
