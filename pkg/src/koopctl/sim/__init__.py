"""Deterministic simulators and scripted policies."""

from .acrobot import ACROBOT, ACROBOT_SPEC, step_acrobot
from .base import Environment, StepOutcome
from .cartpole import CARTPOLE, CARTPOLE_SPEC, step_cartpole
from .lander import LANDER, LANDER_SPEC, step_lander
from .policies import (
    AcrobotEnergyPump,
    CartPoleGains,
    CartPolePD,
    DescentGains,
    HoverGains,
    LanderDescentPD,
    LanderHover,
    LanderNoop,
    MixturePolicy,
    Policy,
    RandomPolicy,
    make_policy,
)
from .rollout import generate_skill_series, rollout, rollout_set

ENVIRONMENTS = {
    "cartpole": CARTPOLE,
    "acrobot": ACROBOT,
    "lander": LANDER,
}


def get_environment(name: str) -> Environment:
    """Look up a bundled environment by name."""
    try:
        return ENVIRONMENTS[name]
    except KeyError:
        raise ValueError(
            f"unknown environment {name!r}; choose from {sorted(ENVIRONMENTS)}"
        ) from None


__all__ = [
    "ACROBOT",
    "ACROBOT_SPEC",
    "AcrobotEnergyPump",
    "CARTPOLE",
    "CARTPOLE_SPEC",
    "CartPoleGains",
    "CartPolePD",
    "DescentGains",
    "ENVIRONMENTS",
    "Environment",
    "HoverGains",
    "LANDER",
    "LANDER_SPEC",
    "LanderDescentPD",
    "LanderHover",
    "LanderNoop",
    "MixturePolicy",
    "Policy",
    "RandomPolicy",
    "StepOutcome",
    "generate_skill_series",
    "get_environment",
    "make_policy",
    "rollout",
    "rollout_set",
    "step_acrobot",
    "step_cartpole",
    "step_lander",
]
