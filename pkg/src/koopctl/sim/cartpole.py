"""Cart-pole balancing with a discrete push-left/push-right action.

Classic benchmark constants; semi-implicit Euler (velocities first, then
positions with the updated velocities).  Every step, including the
terminating one, earns reward +1.
"""

from __future__ import annotations

import numpy as np

from ..trajectories import EnvSpec
from .base import Environment, StepOutcome, require_action, require_state

GRAVITY = 9.8
CART_MASS = 1.0
POLE_MASS = 0.1
TOTAL_MASS = CART_MASS + POLE_MASS
HALF_LENGTH = 0.5  # half the pole length
POLE_MASS_LENGTH = POLE_MASS * HALF_LENGTH
FORCE_MAG = 10.0
DT = 0.02
ANGLE_LIMIT = 12 * 2 * np.pi / 360  # 12 degrees
X_LIMIT = 2.4

CARTPOLE_SPEC = EnvSpec(
    name="cartpole",
    state_dim=4,
    action_count=2,
    state_labels=("x", "x_dot", "theta", "theta_dot"),
)


def step_cartpole(state, action) -> StepOutcome:
    """Advance one cart-pole step; action 1 pushes toward +x."""
    x, x_dot, theta, theta_dot = require_state(state, 4)
    action = require_action(action, 2)

    force = FORCE_MAG if action == 1 else -FORCE_MAG
    cos_t = np.cos(theta)
    sin_t = np.sin(theta)
    temp = (force + POLE_MASS_LENGTH * theta_dot**2 * sin_t) / TOTAL_MASS
    theta_acc = (GRAVITY * sin_t - cos_t * temp) / (
        HALF_LENGTH * (4.0 / 3.0 - POLE_MASS * cos_t**2 / TOTAL_MASS)
    )
    x_acc = temp - POLE_MASS_LENGTH * theta_acc * cos_t / TOTAL_MASS

    x_dot = x_dot + DT * x_acc
    x = x + DT * x_dot
    theta_dot = theta_dot + DT * theta_acc
    theta = theta + DT * theta_dot

    next_state = np.array([x, x_dot, theta, theta_dot])
    terminated = bool(
        theta > ANGLE_LIMIT or theta < -ANGLE_LIMIT or x > X_LIMIT or x < -X_LIMIT
    )
    return StepOutcome(next_state=next_state, reward=1.0, terminated=terminated)


def initial_cartpole(rng: np.random.Generator) -> np.ndarray:
    """Uniform perturbation of every coordinate around the upright rest state."""
    return rng.uniform(-0.05, 0.05, size=4)


CARTPOLE = Environment(spec=CARTPOLE_SPEC, step=step_cartpole, initial=initial_cartpole)
