"""koopctl-export: dump RL rollouts in the koopctl interchange format."""

from .envs import (
    BoxSpace,
    DiscreteSpace,
    FallbackCartPole,
    env_interface,
    make_env,
)
from .export import FORMAT_TAG, ExportJob, export_rollouts
from .models import (
    LINEAR_TAG,
    RANDOM_TAG,
    LinearPolicyModel,
    ModelLoadError,
    RandomModel,
    load_model,
)

__version__ = "0.1.0"

__all__ = [
    "BoxSpace",
    "DiscreteSpace",
    "ExportJob",
    "FORMAT_TAG",
    "FallbackCartPole",
    "LINEAR_TAG",
    "LinearPolicyModel",
    "ModelLoadError",
    "RANDOM_TAG",
    "RandomModel",
    "env_interface",
    "export_rollouts",
    "load_model",
    "make_env",
]
