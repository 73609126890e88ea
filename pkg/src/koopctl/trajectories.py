"""Trajectory data model, interchange file format, and state standardization.

A :class:`Trajectory` is one rollout: a ``T x state_dim`` state matrix, the
``T - 1`` integer actions that produced the transitions, the summed reward,
and the (checkpoint, seed) tag identifying which saved policy generated it.
Sets of trajectories round-trip losslessly through a newline-delimited JSON
interchange format tagged ``koopctl-traj-v1``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from ._validation import as_float_matrix, as_float_vector, require_finite
from .errors import TrajectoryFormatError

FORMAT_TAG = "koopctl-traj-v1"


def _freeze(arr):
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class EnvSpec:
    """Environment signature: state dimension, action count, state labels."""

    name: str
    state_dim: int
    action_count: int
    state_labels: tuple[str, ...]

    def __post_init__(self):
        if self.state_dim < 1:
            raise ValueError("state_dim must be >= 1")
        if self.action_count < 2:
            raise ValueError("action_count must be >= 2")
        labels = tuple(str(s) for s in self.state_labels)
        if len(labels) != self.state_dim:
            raise ValueError(
                f"expected {self.state_dim} state_labels, got {len(labels)}"
            )
        object.__setattr__(self, "state_labels", labels)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """One rollout: states, the actions between them, and bookkeeping tags.

    A trajectory with ``T`` states carries exactly ``T - 1`` actions; action
    ``a_t`` is the one that produced state ``t + 1``.
    """

    states: np.ndarray
    actions: np.ndarray
    total_reward: float
    checkpoint: int
    seed: int

    def __post_init__(self):
        states = as_float_matrix(self.states, "states")
        require_finite(states, "states")
        if states.shape[0] < 2:
            raise ValueError("a trajectory needs at least 2 states")
        actions = np.asarray(self.actions)
        if actions.ndim != 1 or not np.issubdtype(actions.dtype, np.integer):
            actions = np.asarray(self.actions, dtype=int)
            if actions.ndim != 1:
                raise ValueError("actions must be a 1-D integer sequence")
        if len(actions) != states.shape[0] - 1:
            raise ValueError(
                f"expected {states.shape[0] - 1} actions for "
                f"{states.shape[0]} states, got {len(actions)}"
            )
        if len(actions) and actions.min() < 0:
            raise ValueError("action indices must be non-negative")
        if self.checkpoint < 0 or self.seed < 0:
            raise ValueError("checkpoint and seed must be non-negative")
        object.__setattr__(self, "states", _freeze(states))
        object.__setattr__(self, "actions", _freeze(actions))
        object.__setattr__(self, "total_reward", float(self.total_reward))

    @property
    def length(self) -> int:
        """Number of states T."""
        return self.states.shape[0]

    @property
    def n_transitions(self) -> int:
        """Number of (state, action, next-state) transitions, T - 1."""
        return self.states.shape[0] - 1


@dataclass(frozen=True, eq=False)
class TrajectorySet:
    """A non-empty collection of trajectories from one environment.

    ``meta`` is an optional mapping written into the file header (tool
    version, resolved configuration, input digests); it never affects
    analysis.
    """

    env: EnvSpec
    trajectories: tuple[Trajectory, ...]
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        trajs = tuple(self.trajectories)
        if not trajs:
            raise ValueError("TrajectorySet must contain at least one trajectory")
        for i, traj in enumerate(trajs):
            if traj.states.shape[1] != self.env.state_dim:
                raise ValueError(
                    f"trajectory {i} has state dimension "
                    f"{traj.states.shape[1]}, env expects {self.env.state_dim}"
                )
            if traj.actions.size and traj.actions.max() >= self.env.action_count:
                raise ValueError(
                    f"trajectory {i} contains action "
                    f"{int(traj.actions.max())}, valid range is "
                    f"[0, {self.env.action_count})"
                )
        object.__setattr__(self, "trajectories", trajs)
        object.__setattr__(self, "meta", dict(self.meta))

    def __len__(self) -> int:
        return len(self.trajectories)

    def __iter__(self):
        return iter(self.trajectories)

    def with_meta(self, meta: dict) -> "TrajectorySet":
        return replace(self, meta=meta)

    def rewards(self) -> np.ndarray:
        return np.array([t.total_reward for t in self.trajectories])


# ---------------------------------------------------------------------------
# Interchange format
# ---------------------------------------------------------------------------

def _reject_constant(value):
    raise ValueError(f"non-finite literal {value!r} not allowed")


def _parse_record(line, lineno):
    try:
        return json.loads(line, parse_constant=_reject_constant)
    except ValueError as exc:
        raise TrajectoryFormatError(f"malformed record: {exc}", line=lineno)


def _require_fields(record, fields, lineno):
    for name in fields:
        if name not in record:
            raise TrajectoryFormatError(f"missing field {name!r}", line=lineno)


def parse_trajectory_file(data: bytes | str) -> TrajectorySet:
    """Parse a ``koopctl-traj-v1`` byte stream into a validated TrajectorySet.

    The first record is the environment header; each following record is one
    trajectory.  Violations are reported with the 1-based line number.
    """
    if isinstance(data, bytes):
        text = data.decode("utf-8")
    else:
        text = data
    lines = [ln for ln in text.split("\n") if ln.strip()]
    if not lines:
        raise TrajectoryFormatError("empty file", line=1)

    header = _parse_record(lines[0], 1)
    if not isinstance(header, dict) or header.get("format") != FORMAT_TAG:
        raise TrajectoryFormatError(
            f"expected header with format={FORMAT_TAG!r}", line=1
        )
    _require_fields(header, ("env",), 1)
    env_rec = header["env"]
    if not isinstance(env_rec, dict):
        raise TrajectoryFormatError("env header must be an object", line=1)
    _require_fields(
        env_rec, ("name", "state_dim", "action_count", "state_labels"), 1
    )
    try:
        env = EnvSpec(
            name=str(env_rec["name"]),
            state_dim=int(env_rec["state_dim"]),
            action_count=int(env_rec["action_count"]),
            state_labels=tuple(env_rec["state_labels"]),
        )
    except (TypeError, ValueError) as exc:
        raise TrajectoryFormatError(f"invalid env header: {exc}", line=1)
    meta = header.get("meta", {})
    if not isinstance(meta, dict):
        raise TrajectoryFormatError("meta must be an object", line=1)

    trajectories = []
    for lineno, line in enumerate(lines[1:], start=2):
        rec = _parse_record(line, lineno)
        if not isinstance(rec, dict):
            raise TrajectoryFormatError("record must be an object", line=lineno)
        _require_fields(
            rec, ("checkpoint", "seed", "reward", "states", "actions"), lineno
        )
        states = rec["states"]
        actions = rec["actions"]
        if not isinstance(states, list) or not isinstance(actions, list):
            raise TrajectoryFormatError(
                "states and actions must be arrays", line=lineno
            )
        try:
            states_arr = np.array(states, dtype=float)
        except (TypeError, ValueError):
            raise TrajectoryFormatError("ragged or non-numeric states", line=lineno)
        if states_arr.ndim != 2 or states_arr.shape[1] != env.state_dim:
            raise TrajectoryFormatError(
                f"states must be rows of {env.state_dim} numbers", line=lineno
            )
        if not np.all(np.isfinite(states_arr)):
            raise TrajectoryFormatError("non-finite state value", line=lineno)
        if any(not isinstance(a, int) for a in actions):
            raise TrajectoryFormatError("actions must be integers", line=lineno)
        actions_arr = np.array(actions, dtype=int)
        if actions_arr.size and (
            actions_arr.min() < 0 or actions_arr.max() >= env.action_count
        ):
            raise TrajectoryFormatError(
                f"action index out of range [0, {env.action_count})",
                line=lineno,
            )
        try:
            traj = Trajectory(
                states=states_arr,
                actions=actions_arr,
                total_reward=float(rec["reward"]),
                checkpoint=int(rec["checkpoint"]),
                seed=int(rec["seed"]),
            )
        except (TypeError, ValueError) as exc:
            raise TrajectoryFormatError(str(exc), line=lineno)
        trajectories.append(traj)

    if not trajectories:
        raise TrajectoryFormatError("file contains no trajectories", line=1)
    return TrajectorySet(env=env, trajectories=tuple(trajectories), meta=meta)


def _dump(obj) -> str:
    # json emits shortest round-trip decimals for floats; compact separators
    # keep the canonical byte form stable.
    return json.dumps(obj, separators=(",", ":"), allow_nan=False)


def serialize_trajectory_file(traj_set: TrajectorySet) -> bytes:
    """Emit the canonical ``koopctl-traj-v1`` byte form of a TrajectorySet.

    ``parse_trajectory_file`` composed with this function is the identity on
    the data model, and the byte form is itself a fixed point of the
    round-trip.
    """
    env = traj_set.env
    header = {
        "format": FORMAT_TAG,
        "env": {
            "name": env.name,
            "state_dim": env.state_dim,
            "action_count": env.action_count,
            "state_labels": list(env.state_labels),
        },
    }
    if traj_set.meta:
        header["meta"] = json.loads(_dump_sorted(traj_set.meta))
    lines = [_dump(header)]
    for traj in traj_set.trajectories:
        lines.append(
            _dump(
                {
                    "checkpoint": traj.checkpoint,
                    "seed": traj.seed,
                    "reward": traj.total_reward,
                    "states": [[float(v) for v in row] for row in traj.states],
                    "actions": [int(a) for a in traj.actions],
                }
            )
        )
    return ("\n".join(lines) + "\n").encode("utf-8")


def _dump_sorted(obj) -> str:
    return json.dumps(obj, separators=(",", ":"), allow_nan=False, sort_keys=True)


# ---------------------------------------------------------------------------
# Action encoding
# ---------------------------------------------------------------------------

def one_hot_encode(action: int, action_count: int) -> np.ndarray:
    """Encode a discrete action index as a one-hot control input vector."""
    action = int(action)
    if not 0 <= action < action_count:
        raise ValueError(
            f"action {action} out of range [0, {action_count})"
        )
    vec = np.zeros(action_count)
    vec[action] = 1.0
    return vec


# ---------------------------------------------------------------------------
# State standardization
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ScalingParams:
    """Per-coordinate centering and scaling for state standardization."""

    mean: np.ndarray
    scale: np.ndarray

    def __post_init__(self):
        mean = as_float_vector(self.mean, "mean")
        scale = as_float_vector(self.scale, "scale")
        if mean.shape != scale.shape:
            raise ValueError("mean and scale must have equal length")
        if np.any(scale <= 0):
            raise ValueError("scale entries must be strictly positive")
        object.__setattr__(self, "mean", _freeze(mean))
        object.__setattr__(self, "scale", _freeze(scale))


def fit_scaling(traj_set: TrajectorySet) -> ScalingParams:
    """Pool all states of all trajectories and fit per-coordinate mean/std.

    Zero-variance coordinates get scale 1 so that the state dimension stays
    stable across checkpoints.
    """
    stacked = np.vstack([t.states for t in traj_set.trajectories])
    mean = stacked.mean(axis=0)
    scale = stacked.std(axis=0)
    scale[scale == 0.0] = 1.0
    return ScalingParams(mean=mean, scale=scale)


def apply_scaling(traj_set: TrajectorySet, params: ScalingParams) -> TrajectorySet:
    """Return a copy of the set with each state row mapped to (x - mean) / scale."""
    if params.mean.shape[0] != traj_set.env.state_dim:
        raise ValueError(
            f"scaling has dimension {params.mean.shape[0]}, "
            f"set has state_dim {traj_set.env.state_dim}"
        )
    scaled = tuple(
        replace(t, states=(t.states - params.mean) / params.scale)
        for t in traj_set.trajectories
    )
    return replace(traj_set, trajectories=scaled)


def invert_scaling(traj_set: TrajectorySet, params: ScalingParams) -> TrajectorySet:
    """Undo :func:`apply_scaling` with the same parameters."""
    if params.mean.shape[0] != traj_set.env.state_dim:
        raise ValueError("scaling dimension mismatch")
    unscaled = tuple(
        replace(t, states=t.states * params.scale + params.mean)
        for t in traj_set.trajectories
    )
    return replace(traj_set, trajectories=unscaled)


class StateScaler(BaseEstimator, TransformerMixin):
    """Z-scoring transformer over state matrices (rows are samples).

    Mirrors the pooled standardization used on trajectory sets, with the same
    zero-variance rule, in a form that composes with sklearn pipelines.

    Attributes
    ----------
    mean_ : np.ndarray
        Per-coordinate mean of the fitted data.
    scale_ : np.ndarray
        Per-coordinate standard deviation; 1.0 where the data had none.
    """

    def fit(self, X, y=None):
        X = as_float_matrix(X)
        require_finite(X)
        self.mean_ = X.mean(axis=0)
        scale = X.std(axis=0)
        scale[scale == 0.0] = 1.0
        self.scale_ = scale
        return self

    def transform(self, X):
        self._check_fitted()
        X = as_float_matrix(X)
        if X.shape[1] != self.mean_.shape[0]:
            raise ValueError("dimension mismatch with fitted scaling")
        return (X - self.mean_) / self.scale_

    def inverse_transform(self, X):
        self._check_fitted()
        X = as_float_matrix(X)
        if X.shape[1] != self.mean_.shape[0]:
            raise ValueError("dimension mismatch with fitted scaling")
        return X * self.scale_ + self.mean_

    def params(self) -> ScalingParams:
        self._check_fitted()
        return ScalingParams(mean=self.mean_.copy(), scale=self.scale_.copy())

    def _check_fitted(self):
        if not hasattr(self, "mean_"):
            raise NotFittedError("StateScaler is not fitted")
