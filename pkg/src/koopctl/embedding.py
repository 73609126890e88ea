"""Time-delay (Hankel) embedding and snapshot matrix assembly.

The lifted state ``z_t`` stacks the current state and its ``n_delay - 1``
predecessors, newest block first.  Snapshot matrices pair each ``z_t`` with
its successor ``z_{t+1}`` and the one-hot encoding of the action applied at
the time of ``z_t``'s newest state; pairs never straddle a trajectory
boundary.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import as_float_matrix, require_finite
from .trajectories import (
    ScalingParams,
    Trajectory,
    TrajectorySet,
    apply_scaling,
    fit_scaling,
    one_hot_encode,
)


@dataclass(frozen=True)
class EmbedConfig:
    """Delay-embedding settings: window length and standardization switch."""

    n_delay: int
    standardize: bool = True

    def __post_init__(self):
        if self.n_delay < 1:
            raise ValueError("n_delay must be >= 1")


@dataclass(frozen=True, eq=False)
class SnapshotMatrices:
    """Aligned column-snapshot matrices (Z, Z', U) for operator fitting.

    Attributes
    ----------
    Z : np.ndarray
        Lifted states, shape ``n x m`` (columns are snapshots).
    Zprime : np.ndarray
        One-step successors of the Z columns, same shape.
    U : np.ndarray
        One-hot control inputs, shape ``q x m``.
    n : int
        Lifted dimension, ``n_delay * state_dim``.
    q : int
        Input dimension (action count).
    m : int
        Total number of transitions.
    state_dim : int
        Dimension of a single un-lifted state; the leading ``state_dim``
        rows of Z/Zprime are the newest state block.
    n_delay : int
        Number of stacked delays.
    scaling : ScalingParams | None
        Standardization applied before embedding, if any.
    n_skipped : int
        Trajectories dropped because they were too short to embed.
    """

    Z: np.ndarray
    Zprime: np.ndarray
    U: np.ndarray
    n: int
    q: int
    m: int
    state_dim: int
    n_delay: int
    scaling: ScalingParams | None = None
    n_skipped: int = 0

    def __post_init__(self):
        if self.Z.shape != self.Zprime.shape:
            raise ValueError("Z and Zprime must have identical shape")
        if self.Z.shape != (self.n, self.m):
            raise ValueError("Z shape inconsistent with (n, m)")
        if self.U.shape != (self.q, self.m):
            raise ValueError("U shape inconsistent with (q, m)")
        if self.n != self.n_delay * self.state_dim:
            raise ValueError("n must equal n_delay * state_dim")


def delay_embed(trajectory, n_delay: int) -> np.ndarray:
    """Delay-embed a trajectory's states into Hankel rows, newest block first.

    Row ``k`` of the output is ``[x_{k+n_delay-1}, ..., x_k]`` flattened, so a
    trajectory with ``T`` states yields ``T - n_delay + 1`` rows of width
    ``n_delay * state_dim``.

    Parameters
    ----------
    trajectory : Trajectory | np.ndarray
        Either a :class:`Trajectory` or a raw ``T x state_dim`` state matrix.
    n_delay : int
        Number of stacked states per row; 1 reproduces the input.

    Raises
    ------
    ValueError
        If fewer than ``n_delay`` states are available, so that not even
        one full window fits.
    """
    if n_delay < 1:
        raise ValueError("n_delay must be >= 1")
    states = trajectory.states if isinstance(trajectory, Trajectory) else trajectory
    states = as_float_matrix(states, "states")
    T, d = states.shape
    if T < n_delay:
        raise ValueError(
            f"trajectory too short to embed: {T} states, need at least {n_delay}"
        )
    n_rows = T - n_delay + 1
    # Column block j holds states shifted by (n_delay - 1 - j), newest first.
    blocks = [states[n_delay - 1 - j : n_delay - 1 - j + n_rows] for j in range(n_delay)]
    return np.hstack(blocks)


def build_snapshots(traj_set: TrajectorySet, config: EmbedConfig) -> SnapshotMatrices:
    """Assemble (Z, Z', U) snapshot columns from a trajectory set.

    For each trajectory and each time index ``t`` with a full delay window
    and a successor, one column triple is appended: ``z_t``, ``z_{t+1}``, and
    the one-hot encoding of the action taken at ``z_t``'s newest state.
    Trajectories shorter than ``n_delay + 1`` states are skipped (counted,
    with a warning), never padded; columns never chain across trajectories.

    When ``config.standardize`` is set, scaling is fit on the whole set and
    applied to every state before embedding; the parameters ride along in the
    result.
    """
    n_delay = config.n_delay
    d = traj_set.env.state_dim
    q = traj_set.env.action_count

    scaling = None
    working = traj_set
    if config.standardize:
        scaling = fit_scaling(traj_set)
        working = apply_scaling(traj_set, scaling)

    eye = np.eye(q)
    z_cols, zp_cols, u_cols = [], [], []
    n_skipped = 0
    for traj in working.trajectories:
        if traj.length < n_delay + 1:
            n_skipped += 1
            continue
        rows = delay_embed(traj, n_delay)
        # Transition j pairs embedding rows j and j+1; the action applied at
        # the newest state of row j is actions[j + n_delay - 1].
        z_cols.append(rows[:-1])
        zp_cols.append(rows[1:])
        u_cols.append(eye[traj.actions[n_delay - 1 :]])
    if not z_cols:
        raise ValueError(
            f"all {len(traj_set)} trajectories are too short for "
            f"n_delay={n_delay} (need at least {n_delay + 1} states)"
        )
    if n_skipped:
        warnings.warn(
            f"skipped {n_skipped} trajectories too short to embed "
            f"(n_delay={n_delay})",
            stacklevel=2,
        )

    Z = np.vstack(z_cols).T
    Zprime = np.vstack(zp_cols).T
    U = np.vstack(u_cols).T
    return SnapshotMatrices(
        Z=Z,
        Zprime=Zprime,
        U=U,
        n=n_delay * d,
        q=q,
        m=Z.shape[1],
        state_dim=d,
        n_delay=n_delay,
        scaling=scaling,
        n_skipped=n_skipped,
    )


class DelayEmbedder(BaseEstimator, TransformerMixin):
    """Stateless sklearn transformer mapping state matrices to Hankel rows.

    Parameters
    ----------
    n_delay : int
        Number of stacked states per output row.
    """

    def __init__(self, n_delay: int = 1):
        self.n_delay = n_delay

    def fit(self, X, y=None):
        as_float_matrix(X)
        if self.n_delay < 1:
            raise ValueError("n_delay must be >= 1")
        return self

    def transform(self, X):
        X = as_float_matrix(X)
        require_finite(X)
        return delay_embed(X, self.n_delay)
