"""Rollout driver and checkpoint-series generation."""

from __future__ import annotations

from typing import Iterator, Sequence

import numpy as np

from ..trajectories import Trajectory, TrajectorySet
from .base import Environment
from .policies import Policy


def rollout(
    env: Environment,
    policy: Policy,
    initial_state_seed: int,
    max_steps: int,
    checkpoint: int = 0,
    seed_tag: int | None = None,
) -> Trajectory:
    """Run one episode and record it as a Trajectory.

    The seed draws the initial state from the environment's initial
    distribution and reseeds the policy's stream, so the same arguments
    reproduce the trajectory bit for bit.  ``seed_tag`` overrides the seed
    recorded on the trajectory (used when many episodes share one
    pipeline-level seed tag).
    """
    if max_steps < 1:
        raise ValueError("max_steps must be >= 1")
    rng = np.random.default_rng(np.random.SeedSequence(initial_state_seed))
    policy.reset(initial_state_seed)
    state = env.initial(rng)
    states = [state]
    actions: list[int] = []
    total_reward = 0.0
    for _ in range(max_steps):
        action = policy.act(state)
        outcome = env.step(state, action)
        actions.append(action)
        states.append(outcome.next_state)
        total_reward += outcome.reward
        state = outcome.next_state
        if outcome.terminated:
            break
    return Trajectory(
        states=np.array(states),
        actions=np.array(actions, dtype=int),
        total_reward=total_reward,
        checkpoint=checkpoint,
        seed=initial_state_seed if seed_tag is None else seed_tag,
    )


def rollout_set(
    env: Environment,
    policy: Policy,
    trials: int,
    max_steps: int,
    seed: int,
    checkpoint: int = 0,
    meta: dict | None = None,
) -> TrajectorySet:
    """Collect ``trials`` episodes under one (checkpoint, seed) tag.

    Per-episode seeds are derived from ``(checkpoint, seed)`` so distinct
    tags never share initial states while the whole set stays reproducible.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    ss = np.random.SeedSequence([checkpoint, seed])
    trial_seeds = ss.generate_state(trials, dtype=np.uint64)
    trajectories = [
        rollout(
            env,
            policy,
            initial_state_seed=int(trial_seed),
            max_steps=max_steps,
            checkpoint=checkpoint,
            seed_tag=seed,
        )
        for trial_seed in trial_seeds
    ]
    base_meta = {"policy": type(policy).__name__}
    if meta:
        base_meta.update(meta)
    return TrajectorySet(env=env.spec, trajectories=tuple(trajectories), meta=base_meta)


def generate_skill_series(
    env: Environment,
    skill_schedule: Sequence[tuple[int, Policy]],
    trials_per_checkpoint: int,
    seeds: Sequence[int],
    max_steps: int,
) -> Iterator[TrajectorySet]:
    """Yield one TrajectorySet per (checkpoint, seed) pair.

    The schedule maps checkpoint indices to policies, mimicking saved
    checkpoints of a training run whose skill changes (or does not)
    over time.
    """
    if not skill_schedule:
        raise ValueError("skill schedule must be non-empty")
    for checkpoint, policy in skill_schedule:
        for seed in seeds:
            yield rollout_set(
                env,
                policy,
                trials=trials_per_checkpoint,
                max_steps=max_steps,
                seed=seed,
                checkpoint=checkpoint,
            )
