"""Environment construction against the Gymnasium API surface.

``make_env`` prefers an installed gymnasium; a built-in CartPole-v1
replica keeps the exporter usable (and testable) without it.  Everything
downstream touches environments only through ``reset(seed=...)``,
``step(action)``, and the two space attributes, so real Gymnasium
instances and the fallback are interchangeable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class DiscreteSpace:
    """Minimal stand-in for ``gymnasium.spaces.Discrete``."""

    n: int


@dataclass(frozen=True)
class BoxSpace:
    """Minimal stand-in for a flat ``gymnasium.spaces.Box``."""

    shape: tuple


class FallbackCartPole:
    """CartPole-v1 replica under the Gymnasium env API.

    Transcribed from the classic formulation gymnasium ships: explicit
    Euler at dt 0.02 with positions updated before velocities,
    termination at |x| > 2.4 or |theta| > 12 degrees, reward 1.0 per
    step including the terminating one, initial state uniform in
    +-0.05, and float32 observations of a float64 internal state.  The
    500-step TimeLimit wrapper is omitted; the exporter applies its own
    step cap.
    """

    GRAVITY = 9.8
    MASSCART = 1.0
    MASSPOLE = 0.1
    TOTAL_MASS = MASSCART + MASSPOLE
    LENGTH = 0.5  # half the pole length
    POLEMASS_LENGTH = MASSPOLE * LENGTH
    FORCE_MAG = 10.0
    TAU = 0.02
    THETA_THRESHOLD = 12 * 2 * math.pi / 360
    X_THRESHOLD = 2.4

    def __init__(self):
        self.action_space = DiscreteSpace(2)
        self.observation_space = BoxSpace((4,))
        self._rng = None
        self._state = None

    def reset(self, seed=None):
        if seed is not None:
            self._rng = np.random.default_rng(seed)
        elif self._rng is None:
            self._rng = np.random.default_rng()
        self._state = self._rng.uniform(-0.05, 0.05, size=4)
        return self._state.astype(np.float32), {}

    def step(self, action):
        if action not in (0, 1):
            raise ValueError(f"invalid action {action!r} for Discrete(2)")
        if self._state is None:
            raise RuntimeError("step called before reset")
        x, x_dot, theta, theta_dot = self._state
        force = self.FORCE_MAG if action == 1 else -self.FORCE_MAG
        costheta = math.cos(theta)
        sintheta = math.sin(theta)
        temp = (
            force + self.POLEMASS_LENGTH * theta_dot**2 * sintheta
        ) / self.TOTAL_MASS
        thetaacc = (self.GRAVITY * sintheta - costheta * temp) / (
            self.LENGTH
            * (4.0 / 3.0 - self.MASSPOLE * costheta**2 / self.TOTAL_MASS)
        )
        xacc = temp - self.POLEMASS_LENGTH * thetaacc * costheta / self.TOTAL_MASS
        x = x + self.TAU * x_dot
        x_dot = x_dot + self.TAU * xacc
        theta = theta + self.TAU * theta_dot
        theta_dot = theta_dot + self.TAU * thetaacc
        self._state = np.array([x, x_dot, theta, theta_dot])
        terminated = bool(
            abs(x) > self.X_THRESHOLD or abs(theta) > self.THETA_THRESHOLD
        )
        return self._state.astype(np.float32), 1.0, terminated, False, {}


_FALLBACKS = {"CartPole-v1": FallbackCartPole}

# Canonical coordinate names for well-known ids; anything else gets s0..s{d-1}.
STATE_LABELS = {
    "CartPole-v1": ("x", "x_dot", "theta", "theta_dot"),
    "LunarLander-v2": (
        "x", "y", "x_dot", "y_dot", "angle", "angle_dot",
        "left_contact", "right_contact",
    ),
    "LunarLander-v3": (
        "x", "y", "x_dot", "y_dot", "angle", "angle_dot",
        "left_contact", "right_contact",
    ),
}


def make_env(env_id: str):
    """Instantiate ``env_id`` via gymnasium, or a built-in fallback without it."""
    try:
        import gymnasium
    except ImportError:
        factory = _FALLBACKS.get(env_id)
        if factory is None:
            raise ValueError(
                f"environment {env_id!r} requires gymnasium, which is not "
                f"installed; built-in fallbacks: {sorted(_FALLBACKS)}"
            )
        return factory()
    return gymnasium.make(env_id)


def env_interface(env, env_id: str):
    """(state_dim, action_count, state_labels) read off the env's spaces.

    Refuses continuous action spaces and non-flat observations: the
    interchange format only carries discrete action indices over flat
    real state vectors.
    """
    n = getattr(env.action_space, "n", None)
    if n is None:
        raise ValueError(
            f"environment {env_id!r} has a non-discrete action space "
            f"({type(env.action_space).__name__}); only discrete action "
            f"spaces are supported"
        )
    shape = getattr(env.observation_space, "shape", None)
    if not shape or len(shape) != 1:
        raise ValueError(
            f"environment {env_id!r} observations are not a flat real "
            f"vector (shape {shape})"
        )
    state_dim = int(shape[0])
    labels = STATE_LABELS.get(env_id, ())
    if len(labels) != state_dim:
        labels = tuple(f"s{i}" for i in range(state_dim))
    return state_dim, int(n), labels
