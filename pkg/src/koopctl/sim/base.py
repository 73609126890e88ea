"""Shared plumbing for the bundled simulators."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..trajectories import EnvSpec


@dataclass(frozen=True, eq=False)
class StepOutcome:
    """Result of one environment transition.

    ``truncated`` is only ever set by step-limit logic in the rollout
    driver, never by a stepper.
    """

    next_state: np.ndarray
    reward: float
    terminated: bool
    truncated: bool = False


@dataclass(frozen=True, eq=False)
class Environment:
    """An EnvSpec together with its stepper and initial-state sampler."""

    spec: EnvSpec
    step: Callable[[np.ndarray, int], StepOutcome]
    initial: Callable[[np.random.Generator], np.ndarray]


def require_state(state, dim: int) -> np.ndarray:
    """Validate a state vector: float, finite, correct length."""
    arr = np.asarray(state, dtype=float)
    if arr.shape != (dim,):
        raise ValueError(f"state must have shape ({dim},), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("state contains non-finite values")
    return arr


def require_action(action, count: int) -> int:
    """Validate an action index against the environment's action count."""
    a = int(action)
    if a != action or not 0 <= a < count:
        raise ValueError(f"action must be an integer in [0, {count}), got {action!r}")
    return a
