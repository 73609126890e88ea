"""Simplified planar lander: analytic rigid body, no physics engine.

State is [x, y, x_dot, y_dot, angle, angular velocity, left contact,
right contact] with the pad centered at the origin.  Angle is measured
counter-clockwise from upright, so the body-up axis is
(-sin angle, cos angle).  Actions: 0 nothing, 1 left orientation engine
(torques counter-clockwise, nudges along body-right), 2 main engine
(thrust along body-up), 3 right orientation engine (mirror of 1).

Per step the reward is a potential-based shaping term (approach the pad,
slow down) minus engine costs, plus +100 on a successful landing or -100
on a crash.  Contact flags latch once a leg touches down gently; the
episode ends when both legs are down (landing if inside the pad and
upright, otherwise no bonus) or on any too-fast or too-tilted contact.
"""

from __future__ import annotations

import numpy as np

from ..trajectories import EnvSpec
from .base import Environment, StepOutcome, require_action, require_state

DT = 0.02
GRAVITY = 1.6
MAIN_ACCEL = 5.0
SIDE_ACCEL = 0.2
SIDE_ALPHA = 2.0
MAIN_COST = 0.03
SIDE_COST = 0.003
LEG_DX = 0.2
LEG_DY = 0.3  # legs sit this far below the body center
CRASH_SPEED = 1.0
PAD_HALF_WIDTH = 0.4
UPRIGHT_LIMIT = 0.3
DIST_WEIGHT = 10.0
SPEED_WEIGHT = 3.0

LANDER_SPEC = EnvSpec(
    name="lander",
    state_dim=8,
    action_count=4,
    state_labels=(
        "x",
        "y",
        "x_dot",
        "y_dot",
        "angle",
        "angle_dot",
        "left_contact",
        "right_contact",
    ),
)


def _potential(x, y, x_dot, y_dot) -> float:
    """Shaping potential: higher when closer to the pad and slower."""
    dist = np.sqrt(x * x + y * y)
    speed = np.sqrt(x_dot * x_dot + y_dot * y_dot)
    return float(-(DIST_WEIGHT * dist + SPEED_WEIGHT * speed))


def _leg_heights(x, y, angle) -> tuple[float, float]:
    """World-frame y of the left and right leg tips."""
    cos_a = np.cos(angle)
    sin_a = np.sin(angle)
    left = y + (-LEG_DX) * sin_a + (-LEG_DY) * cos_a
    right = y + LEG_DX * sin_a + (-LEG_DY) * cos_a
    return float(left), float(right)


def step_lander(state, action) -> StepOutcome:
    """Advance one lander step."""
    x, y, x_dot, y_dot, angle, angle_dot, left_c, right_c = require_state(state, 8)
    action = require_action(action, 4)

    up = np.array([-np.sin(angle), np.cos(angle)])
    right_axis = np.array([np.cos(angle), np.sin(angle)])
    accel = np.zeros(2)
    alpha = 0.0
    cost = 0.0
    if action == 2:
        accel = MAIN_ACCEL * up
        cost = MAIN_COST
    elif action == 1:
        accel = SIDE_ACCEL * right_axis
        alpha = SIDE_ALPHA
        cost = SIDE_COST
    elif action == 3:
        accel = -SIDE_ACCEL * right_axis
        alpha = -SIDE_ALPHA
        cost = SIDE_COST

    phi_before = _potential(x, y, x_dot, y_dot)

    x_dot = x_dot + DT * accel[0]
    y_dot = y_dot + DT * accel[1] - DT * GRAVITY
    angle_dot = angle_dot + DT * alpha
    x = x + DT * x_dot
    y = y + DT * y_dot
    angle = angle + DT * angle_dot

    reward = _potential(x, y, x_dot, y_dot) - phi_before - cost
    terminated = False

    left_h, right_h = _leg_heights(x, y, angle)
    touching = left_h <= 0.0 or right_h <= 0.0
    if touching or y <= 0.0:
        gentle = abs(y_dot) < CRASH_SPEED and abs(angle) <= UPRIGHT_LIMIT
        if not gentle or y <= 0.0:
            # Body contact means the craft came down on something other
            # than its legs, which only happens when badly tilted.
            terminated = True
            reward += -100.0
        else:
            left_c = 1.0 if left_h <= 0.0 else left_c
            right_c = 1.0 if right_h <= 0.0 else right_c
            if left_c == 1.0 and right_c == 1.0:
                terminated = True
                if abs(x) <= PAD_HALF_WIDTH:
                    reward += 100.0
                # Gentle touchdown outside the pad ends the episode with
                # neither bonus nor penalty.

    next_state = np.array([x, y, x_dot, y_dot, angle, angle_dot, left_c, right_c])
    return StepOutcome(next_state=next_state, reward=reward, terminated=terminated)


def initial_lander(rng: np.random.Generator) -> np.ndarray:
    """Perturbed start above the pad, contacts clear."""
    x = rng.uniform(-0.2, 0.2)
    y = 1.5 + rng.uniform(-0.1, 0.1)
    x_dot = rng.uniform(-0.1, 0.1)
    y_dot = rng.uniform(-0.2, 0.0)
    angle = rng.uniform(-0.05, 0.05)
    angle_dot = rng.uniform(-0.05, 0.05)
    return np.array([x, y, x_dot, y_dot, angle, angle_dot, 0.0, 0.0])


LANDER = Environment(spec=LANDER_SPEC, step=step_lander, initial=initial_lander)
