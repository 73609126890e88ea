"""Rollout export into the koopctl trajectory interchange format.

``export_rollouts`` is deliberately sequential and fully seeded: the
per-trial reset seed derives from the (checkpoint tag, seed tag) pair,
so identical jobs produce identical bytes, and distinct tags never share
initial states.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .envs import env_interface, make_env
from .models import RandomModel, load_model

FORMAT_TAG = "koopctl-traj-v1"
TOOL = "koopctl-export 0.1.0"


@dataclass(frozen=True)
class ExportJob:
    """One export run: which policies to roll out, where, and how much.

    ``checkpoints`` pairs each checkpoint tag with a model source: a
    path to a saved policy, an object implementing the SB3 ``predict``
    protocol, or None for the uniform random fallback (seeded with the
    tag so the fallback is reproducible too).
    """

    env_id: str
    checkpoints: tuple
    trials: int
    max_steps: int
    seeds: tuple
    deterministic: bool = False
    out_path: Path | None = None

    def __post_init__(self):
        if not self.env_id or not isinstance(self.env_id, str):
            raise ValueError("env_id must be a non-empty string")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        pairs = tuple(self.checkpoints)
        if not pairs:
            raise ValueError("checkpoints must be non-empty")
        tags = []
        for pair in pairs:
            if len(pair) != 2:
                raise ValueError("checkpoints must be (tag, model) pairs")
            tag = pair[0]
            if not isinstance(tag, int) or tag < 0:
                raise ValueError("checkpoint tags must be non-negative ints")
            tags.append(tag)
        if len(set(tags)) != len(tags):
            raise ValueError("checkpoint tags must be distinct")
        seeds = tuple(self.seeds)
        if not seeds:
            raise ValueError("seeds must be non-empty")
        if any(not isinstance(s, int) or s < 0 for s in seeds):
            raise ValueError("seeds must be non-negative ints")
        if len(set(seeds)) != len(seeds):
            raise ValueError("seeds must be distinct")
        object.__setattr__(self, "checkpoints", pairs)
        object.__setattr__(self, "seeds", seeds)


def _resolve_model(source, tag, state_dim, action_count, env_id):
    if source is None:
        model = RandomModel(action_count, seed=tag)
    elif isinstance(source, (str, Path)):
        model = load_model(source, action_count=action_count)
    else:
        model = source
    _check_dims(model, state_dim, action_count, env_id)
    return model


def _check_dims(model, state_dim, action_count, env_id):
    # Probe whichever dimension attributes the model exposes; SB3 models
    # carry spaces, the built-ins carry plain ints.
    m_actions = getattr(model, "action_count", None)
    if m_actions is None:
        m_actions = getattr(getattr(model, "action_space", None), "n", None)
    if m_actions is not None and int(m_actions) != action_count:
        raise ValueError(
            f"dimension drift: model emits {int(m_actions)} actions but "
            f"{env_id} has {action_count}"
        )
    m_dim = getattr(model, "state_dim", None)
    if m_dim is None:
        shape = getattr(getattr(model, "observation_space", None), "shape", None)
        m_dim = shape[0] if shape and len(shape) == 1 else None
    if m_dim is not None and int(m_dim) != state_dim:
        raise ValueError(
            f"dimension drift: model expects {int(m_dim)}-dim observations "
            f"but {env_id} yields {state_dim}"
        )


def _run_episode(env, model, reset_seed, max_steps, deterministic):
    obs, _ = env.reset(seed=reset_seed)
    states = [np.asarray(obs, dtype=float).reshape(-1)]
    actions = []
    total = 0.0
    for _ in range(max_steps):
        action, _ = model.predict(obs, deterministic=deterministic)
        action = int(np.asarray(action).reshape(()))
        obs, reward, terminated, truncated, _ = env.step(action)
        states.append(np.asarray(obs, dtype=float).reshape(-1))
        actions.append(action)
        total += float(reward)
        if terminated or truncated:
            break
    return states, actions, total


def export_rollouts(job: ExportJob) -> bytes:
    """Roll out every (checkpoint, seed, trial) and serialize one file.

    Returns the interchange bytes; when ``job.out_path`` is set they are
    also written there.  Actions are recorded exactly as the policy
    emitted them.
    """
    env = make_env(job.env_id)
    state_dim, action_count, labels = env_interface(env, job.env_id)
    models = [
        (tag, _resolve_model(source, tag, state_dim, action_count, job.env_id))
        for tag, source in job.checkpoints
    ]
    records = []
    for tag, model in models:
        for seed in job.seeds:
            trial_seeds = np.random.SeedSequence([tag, seed]).generate_state(
                job.trials, dtype=np.uint64
            )
            for trial_seed in trial_seeds:
                states, actions, total = _run_episode(
                    env, model, int(trial_seed), job.max_steps, job.deterministic
                )
                records.append((tag, seed, total, states, actions))
    payload = _serialize(job, state_dim, action_count, labels, models, records)
    if job.out_path is not None:
        Path(job.out_path).write_bytes(payload)
    return payload


def _dump(obj) -> str:
    return json.dumps(obj, separators=(",", ":"), allow_nan=False)


def _serialize(job, state_dim, action_count, labels, models, records) -> bytes:
    # Canonical koopctl-traj-v1 byte form: compact separators, sorted
    # meta keys, one record per line.  The primary parser composed with
    # its own serializer reproduces these bytes exactly.
    meta = {
        "tool": TOOL,
        "env_id": job.env_id,
        "deterministic": job.deterministic,
        "models": {
            str(tag): getattr(model, "kind", type(model).__name__)
            for tag, model in models
        },
    }
    header = {
        "format": FORMAT_TAG,
        "env": {
            "name": job.env_id,
            "state_dim": state_dim,
            "action_count": action_count,
            "state_labels": list(labels),
        },
        "meta": json.loads(
            json.dumps(meta, separators=(",", ":"), allow_nan=False, sort_keys=True)
        ),
    }
    lines = [_dump(header)]
    for tag, seed, total, states, actions in records:
        lines.append(
            _dump(
                {
                    "checkpoint": tag,
                    "seed": seed,
                    "reward": total,
                    "states": [[float(v) for v in row] for row in states],
                    "actions": [int(a) for a in actions],
                }
            )
        )
    return ("\n".join(lines) + "\n").encode("utf-8")
