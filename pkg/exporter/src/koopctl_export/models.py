"""Policies behind the Stable-Baselines3 ``predict`` protocol.

The exporter only ever calls ``model.predict(obs, deterministic=...)``
and records the returned action index, so real SB3 checkpoints, the
built-in JSON formats, and test doubles are interchangeable.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

LINEAR_TAG = "koopctl-export-linear-v1"
RANDOM_TAG = "koopctl-export-random-v1"


class ModelLoadError(ValueError):
    """A saved policy file could not be interpreted."""


class RandomModel:
    """Uniform random fallback policy.

    There are no parameters to argmax over, so the ``deterministic``
    flag cannot bind; reproducibility rests on the seed alone.
    """

    kind = "random"

    def __init__(self, action_count: int, seed: int = 0):
        if action_count < 2:
            raise ValueError("action_count must be >= 2")
        self.action_count = int(action_count)
        self._rng = np.random.default_rng(seed)

    def predict(self, observation, state=None, episode_start=None, deterministic=False):
        return int(self._rng.integers(self.action_count)), None


class LinearPolicyModel:
    """Affine logits over the observation.

    Deterministic mode takes the argmax (ties resolve to the lowest
    index); sampled mode draws from the softmax with the model's own
    generator, matching how stochastic RL policies emit actions.
    """

    kind = "linear"

    def __init__(self, weights, bias=None, seed: int = 0):
        W = np.asarray(weights, dtype=float)
        if W.ndim != 2 or W.shape[0] < 2:
            raise ValueError(
                "weights must be (action_count, state_dim) with >= 2 rows"
            )
        b = np.zeros(W.shape[0]) if bias is None else np.asarray(bias, dtype=float)
        if b.shape != (W.shape[0],):
            raise ValueError("bias length must match weight rows")
        if not (np.all(np.isfinite(W)) and np.all(np.isfinite(b))):
            raise ValueError("weights and bias must be finite")
        self.weights = W
        self.bias = b
        self.action_count, self.state_dim = W.shape
        self._rng = np.random.default_rng(seed)

    def predict(self, observation, state=None, episode_start=None, deterministic=False):
        obs = np.asarray(observation, dtype=float).reshape(-1)
        if obs.shape != (self.state_dim,):
            raise ValueError(
                f"dimension drift: model expects {self.state_dim}-dim "
                f"observations, got {obs.shape[0]}"
            )
        logits = self.weights @ obs + self.bias
        if deterministic:
            return int(np.argmax(logits)), None
        z = np.exp(logits - logits.max())
        return int(self._rng.choice(self.action_count, p=z / z.sum())), None


def load_model(path, action_count: int | None = None):
    """Load a saved policy: a built-in JSON format or an SB3 ``.zip``.

    ``action_count`` binds the random fallback to the environment and is
    otherwise only checked downstream.
    """
    path = Path(path)
    if path.suffix == ".zip":
        return _load_sb3(path)
    try:
        payload = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ModelLoadError(f"{path}: not valid JSON ({exc})")
    if not isinstance(payload, dict):
        raise ModelLoadError(f"{path}: model file must be a JSON object")
    tag = payload.get("model")
    seed = payload.get("seed", 0)
    if not isinstance(seed, int) or seed < 0:
        raise ModelLoadError(f"{path}: seed must be a non-negative integer")
    if tag == LINEAR_TAG:
        if "weights" not in payload:
            raise ModelLoadError(f"{path}: linear model needs 'weights'")
        try:
            return LinearPolicyModel(
                payload["weights"], payload.get("bias"), seed=seed
            )
        except ValueError as exc:
            raise ModelLoadError(f"{path}: {exc}")
    if tag == RANDOM_TAG:
        if action_count is None:
            raise ModelLoadError(
                f"{path}: random model needs the environment's action count"
            )
        return RandomModel(action_count, seed=seed)
    raise ModelLoadError(f"{path}: unknown model tag {tag!r}")


def _load_sb3(path: Path):
    try:
        from stable_baselines3 import A2C, PPO
    except ImportError:
        raise ModelLoadError(
            f"{path}: loading SB3 checkpoints requires stable-baselines3"
        ) from None
    last = None
    # PPO and A2C share the actor-critic policy class, so trying both
    # covers the supported checkpoint kinds without a format sniffer.
    for algo in (PPO, A2C):
        try:
            return algo.load(str(path), device="cpu")
        except Exception as exc:
            last = exc
    raise ModelLoadError(f"{path}: not loadable as PPO or A2C ({last})")
