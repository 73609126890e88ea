"""Scripted policies of graded skill for the bundled environments.

These stand in for trained agents: deterministic controllers (PD loops,
energy pumping) plus seeded-stochastic wrappers.  A policy is reset with
an episode seed before each rollout; given the same seed and state
sequence it reproduces the same actions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import acrobot as _acrobot
from . import lander as _lander


class Policy:
    """Base: a map from state to action index, reseedable per episode."""

    def reset(self, episode_seed: int) -> None:
        """Prepare for a new episode; deterministic policies ignore this."""

    def act(self, state: np.ndarray) -> int:
        raise NotImplementedError


class RandomPolicy(Policy):
    """Uniform random actions from a seeded stream."""

    def __init__(self, action_count: int, seed: int = 0):
        if action_count < 2:
            raise ValueError("action_count must be >= 2")
        self.action_count = action_count
        self.seed = seed
        self.reset(0)

    def reset(self, episode_seed: int) -> None:
        ss = np.random.SeedSequence([self.seed, episode_seed])
        self._rng = np.random.default_rng(ss)

    def act(self, state: np.ndarray) -> int:
        return int(self._rng.integers(self.action_count))


class MixturePolicy(Policy):
    """Follow a base policy, replacing each action with a uniform random
    one with probability ``explore_prob``.

    Interpolates between ``RandomPolicy`` (prob 1) and the base (prob 0),
    giving a graded-skill family from a single competent controller.
    """

    def __init__(self, base: Policy, action_count: int, explore_prob: float, seed: int = 0):
        if not 0.0 <= explore_prob <= 1.0:
            raise ValueError("explore_prob must lie in [0, 1]")
        self.base = base
        self.action_count = action_count
        self.explore_prob = explore_prob
        self.seed = seed
        self.reset(0)

    def reset(self, episode_seed: int) -> None:
        ss = np.random.SeedSequence([self.seed, episode_seed])
        self._rng = np.random.default_rng(ss)
        self.base.reset(episode_seed)

    def act(self, state: np.ndarray) -> int:
        base_action = self.base.act(state)
        if self._rng.random() < self.explore_prob:
            return int(self._rng.integers(self.action_count))
        return base_action


@dataclass(frozen=True)
class CartPoleGains:
    k_x: float = 0.0
    k_xdot: float = 0.0
    k_theta: float = 1.0
    k_thetadot: float = 0.07
    band: float = 0.12


class CartPolePD(Policy):
    """Relay PD balance with a hysteresis band.

    Push right while the combined error exceeds ``band``, left below
    ``-band``, and keep the previous action inside the band.  The band
    turns step-by-step chattering into a slow, smooth limit cycle, which
    keeps the trajectory ensemble low-rank and fit-friendly; a plain
    sign relay (band 0) is recovered by setting ``band=0.0``.
    """

    def __init__(self, gains: CartPoleGains = CartPoleGains()):
        self.gains = gains
        self._last = 1

    def reset(self, episode_seed: int) -> None:
        self._last = 1

    def act(self, state: np.ndarray) -> int:
        x, x_dot, theta, theta_dot = state
        g = self.gains
        u = g.k_x * x + g.k_xdot * x_dot + g.k_theta * theta + g.k_thetadot * theta_dot
        if u > g.band:
            self._last = 1
        elif u < -g.band:
            self._last = 0
        return self._last


def acrobot_energy(state: np.ndarray) -> float:
    """Mechanical energy of an acrobot observation (hanging rest: -19.6)."""
    theta1 = float(np.arctan2(state[1], state[0]))
    theta2 = float(np.arctan2(state[3], state[2]))
    dtheta1, dtheta2 = float(state[4]), float(state[5])
    m = _acrobot.LINK_MASS
    l1 = _acrobot.LINK_LENGTH
    lc = _acrobot.LINK_COM
    inertia = _acrobot.LINK_INERTIA
    g = _acrobot.GRAVITY
    d1 = m * lc**2 + m * (l1**2 + lc**2 + 2 * l1 * lc * np.cos(theta2)) + 2 * inertia
    d2 = m * (lc**2 + l1 * lc * np.cos(theta2)) + inertia
    kinetic = (
        0.5 * d1 * dtheta1**2
        + d2 * dtheta1 * dtheta2
        + 0.5 * (m * lc**2 + inertia) * dtheta2**2
    )
    potential = -(m * lc + m * l1) * g * np.cos(theta1) - m * lc * g * np.cos(
        theta1 + theta2
    )
    return float(kinetic + potential)


class AcrobotEnergyPump(Policy):
    """Swing-up by energy regulation: torque with the elbow velocity while
    mechanical energy is below the threshold, against it while above, and
    coast inside the band.

    ``dE/dt = torque * theta2_dot``, so torquing with the elbow velocity
    always injects energy and torquing against it always removes energy.
    The default threshold clears the goal height (minimum energy to reach
    it is 4.9 with this parameterization), so the regulator acts as a
    plain pump-and-terminate swing-up; a threshold below the hanging
    energy band instead settles into a sustained small oscillation.
    """

    def __init__(self, threshold: float = 10.5, band: float = 0.3):
        self.threshold = threshold
        self.band = band

    def act(self, state: np.ndarray) -> int:
        energy = acrobot_energy(state)
        dtheta2 = state[5]
        reference = dtheta2 if dtheta2 != 0.0 else state[4]
        if energy < self.threshold - self.band:
            return 2 if reference >= 0.0 else 0
        if energy > self.threshold:
            return 0 if reference >= 0.0 else 2
        return 1


class LanderNoop(Policy):
    """Never fires an engine: the falling regime."""

    def act(self, state: np.ndarray) -> int:
        return 0


@dataclass(frozen=True)
class HoverGains:
    k_y: float = 1.0
    k_ydot: float = 1.0
    k_angle: float = 8.0
    k_angledot: float = 4.0
    alpha_dead: float = 0.5
    y_ref: float = 1.5


class LanderHover(Policy):
    """Hold altitude with bang-bang thrust, keeping the body upright.

    The altitude loop has no damping toward a settling point by design;
    the craft cycles around the reference instead of descending.
    """

    def __init__(self, gains: HoverGains = HoverGains()):
        self.gains = gains

    def act(self, state: np.ndarray) -> int:
        x, y, x_dot, y_dot, angle, angle_dot = state[:6]
        g = self.gains
        alpha_cmd = -g.k_angle * angle - g.k_angledot * angle_dot
        if abs(alpha_cmd) > g.alpha_dead:
            return 1 if alpha_cmd > 0 else 3
        v_cmd = np.clip(g.k_y * (g.y_ref - y), -0.5, 0.5)
        if y_dot < v_cmd:
            return 2
        return 0


@dataclass(frozen=True)
class DescentGains:
    descent_rate: float = 0.05
    band: float = 0.3
    y_hold: float = 0.0
    k_px: float = 0.6
    k_dx: float = 1.2
    angle_limit: float = 0.15
    k_angle: float = 8.0
    k_angledot: float = 4.0
    alpha_dead: float = 0.5


class LanderDescentPD(Policy):
    """Controlled descent toward the pad: the landing regime.

    The vertical reference ``y_dot_ref = -descent_rate * (y - y_hold)``
    contracts the altitude exponentially toward ``y_hold``, so the
    dominant closed-loop mode decays at roughly
    ``exp(-descent_rate * dt)`` per step.  The thrust relay has a
    hysteresis band around the reference: fire below ``y_dot_ref - band``,
    cut above ``y_dot_ref + band``, hold otherwise.  The band replaces
    step-by-step thrust chatter with a slow sawtooth limit cycle, keeping
    the trajectory ensemble low-rank; ``band=0.0`` recovers the plain
    relay.  A slow outer loop tilts the body to steer horizontal position
    back over the pad.
    """

    def __init__(self, gains: DescentGains = DescentGains()):
        self.gains = gains
        self._fire = False

    def reset(self, episode_seed: int) -> None:
        self._fire = False

    def act(self, state: np.ndarray) -> int:
        x, y, x_dot, y_dot, angle, angle_dot = state[:6]
        g = self.gains
        angle_ref = float(np.clip(g.k_px * x + g.k_dx * x_dot, -g.angle_limit, g.angle_limit))
        alpha_cmd = g.k_angle * (angle_ref - angle) - g.k_angledot * angle_dot
        if abs(alpha_cmd) > g.alpha_dead:
            return 1 if alpha_cmd > 0 else 3
        reference = -g.descent_rate * (y - g.y_hold)
        if y_dot < reference - g.band:
            self._fire = True
        elif y_dot > reference + g.band:
            self._fire = False
        return 2 if self._fire else 0


def make_policy(name: str, env_name: str, seed: int = 0, **params) -> Policy:
    """Construct a policy by CLI name for a given environment."""
    key = (name, env_name)
    if name == "random":
        counts = {"cartpole": 2, "acrobot": 3, "lander": 4}
        if env_name not in counts:
            raise ValueError(f"unknown environment {env_name!r}")
        return RandomPolicy(counts[env_name], seed=seed, **params)
    builders = {
        ("pd", "cartpole"): lambda: CartPolePD(
            CartPoleGains(**params) if params else CartPoleGains()
        ),
        ("energy_pump", "acrobot"): lambda: AcrobotEnergyPump(**params),
        ("noop", "lander"): lambda: LanderNoop(),
        ("hover", "lander"): lambda: LanderHover(
            HoverGains(**params) if params else HoverGains()
        ),
        ("descent", "lander"): lambda: LanderDescentPD(
            DescentGains(**params) if params else DescentGains()
        ),
    }
    if key not in builders:
        raise ValueError(f"unknown policy {name!r} for environment {env_name!r}")
    return builders[key]()
