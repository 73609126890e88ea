"""Independent reference computations the tests check the package against.

Everything here is recomputed from first principles: explicit matrix powers,
rational-arithmetic elimination, direct simulation of known linear systems.
None of it calls into the fitting or metric code, so agreement between an
oracle and the package is evidence, not tautology.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np
from scipy.optimize import linear_sum_assignment

from koopctl import EnvSpec, SnapshotMatrices, Trajectory, TrajectorySet


# ---------------------------------------------------------------------------
# Known linear systems
# ---------------------------------------------------------------------------

def random_stable_pair(rng, n, q, spectral_radius=0.9):
    """Random (A, B) with A rescaled to the requested spectral radius."""
    A = rng.standard_normal((n, n))
    radius = np.abs(np.linalg.eigvals(A)).max()
    A = A * (spectral_radius / radius)
    B = rng.standard_normal((n, q))
    return A, B


def simulate_lti_snapshots(A, B, m, rng, x0=None):
    """Roll out ``x+ = A x + B u`` under uniform one-hot inputs.

    Returns aligned (Z, Z', U) snapshot matrices with n_delay 1, exactly the
    data a perfect fit must reproduce.
    """
    n, q = B.shape
    x = rng.standard_normal(n) if x0 is None else np.asarray(x0, dtype=float)
    eye = np.eye(q)
    Z = np.empty((n, m))
    Zprime = np.empty((n, m))
    U = np.empty((q, m))
    for j in range(m):
        u = eye[rng.integers(q)]
        x_next = A @ x + B @ u
        Z[:, j] = x
        U[:, j] = u
        Zprime[:, j] = x_next
        x = x_next
    return SnapshotMatrices(
        Z=Z, Zprime=Zprime, U=U, n=n, q=q, m=m, state_dim=n, n_delay=1
    )


def lti_trajectory_set(A, B, n_traj, T, rng, checkpoint=0, seed=0):
    """Package LTI rollouts as a TrajectorySet with uniform random actions."""
    n, q = B.shape
    eye = np.eye(q)
    trajectories = []
    for _ in range(n_traj):
        x = rng.standard_normal(n)
        states = [x]
        actions = []
        for _ in range(T - 1):
            a = int(rng.integers(q))
            x = A @ x + B @ eye[a]
            states.append(x)
            actions.append(a)
        trajectories.append(
            Trajectory(
                states=np.array(states),
                actions=np.array(actions, dtype=int),
                total_reward=0.0,
                checkpoint=checkpoint,
                seed=seed,
            )
        )
    env = EnvSpec(
        name="lti",
        state_dim=n,
        action_count=q,
        state_labels=tuple(f"x{i}" for i in range(n)),
    )
    return TrajectorySet(env=env, trajectories=tuple(trajectories))


def eig_match_distance(a, b):
    """Largest pairing distance between two complex multisets.

    Optimal assignment, so multiset equality within tol means the returned
    value is below tol regardless of ordering or conjugate-pair layout.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError("multisets must have equal size")
    cost = np.abs(a[:, None] - b[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max())


# ---------------------------------------------------------------------------
# Controllability
# ---------------------------------------------------------------------------

def kalman_rank(A, B, rel_tol=1e-10):
    """Kalman rank via explicitly formed powers ``A^k B``, k = 0..r-1."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    r = A.shape[0]
    blocks = [np.linalg.matrix_power(A, k) @ B for k in range(r)]
    sigma = np.linalg.svd(np.hstack(blocks), compute_uv=False)
    if sigma.size == 0 or sigma[0] <= 0.0:
        return 0
    return int(np.count_nonzero(sigma > rel_tol * sigma[0]))


def fraction_rank(M):
    """Exact rank over the rationals by Gaussian elimination."""
    rows = [[Fraction(int(x)) for x in row] for row in np.asarray(M)]
    rank = 0
    n_cols = len(rows[0]) if rows else 0
    for col in range(n_cols):
        pivot = next(
            (i for i in range(rank, len(rows)) if rows[i][col] != 0), None
        )
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        factor = rows[rank][col]
        rows[rank] = [v / factor for v in rows[rank]]
        for i in range(len(rows)):
            if i != rank and rows[i][col] != 0:
                scale = rows[i][col]
                rows[i] = [v - scale * p for v, p in zip(rows[i], rows[rank])]
        rank += 1
        if rank == len(rows):
            break
    return rank


def integer_ctrb_instance(r, deficit):
    """Small-integer (A, B) whose Kalman rank is exactly ``r - deficit``.

    Distinct integer eigenvalues with B supported on the first ``r - deficit``
    coordinates: the controllability matrix restricted to the supported rows
    is a Vandermonde block on distinct nodes (nonsingular), and the remaining
    rows are identically zero.
    """
    if not 0 <= deficit < r:
        raise ValueError("deficit must lie in [0, r)")
    A = np.diag(np.arange(1, r + 1))
    B = np.zeros((r, 1), dtype=int)
    B[: r - deficit, 0] = 1
    return A, B


def embedded_deficit_pair(rng, r, deficit):
    """Random orthogonal conjugation of an exact-deficit integer instance.

    Similarity transforms preserve the controllability rank; the float
    rotation moves the deficiency off the coordinate axes so the numerical
    rank decision is actually exercised.
    """
    A0, B0 = integer_ctrb_instance(r, deficit)
    Q, _ = np.linalg.qr(rng.standard_normal((r, r)))
    return Q @ A0 @ Q.T, Q @ B0.astype(float)


# ---------------------------------------------------------------------------
# Acrobot mechanics
# ---------------------------------------------------------------------------

def acrobot_energy_from_angles(theta1, theta2, dtheta1, dtheta2):
    """Two-link mechanical energy, angles measured from the downward vertical.

    Standard point-parameters: unit masses and lengths, centers of mass at
    0.5, unit link inertias, g = 9.8.  Hanging rest sits at -19.6.
    """
    m, l1, lc, inertia, g = 1.0, 1.0, 0.5, 1.0, 9.8
    v2_sq = (
        l1**2 * dtheta1**2
        + lc**2 * (dtheta1 + dtheta2) ** 2
        + 2 * l1 * lc * dtheta1 * (dtheta1 + dtheta2) * np.cos(theta2)
    )
    kinetic = (
        0.5 * m * lc**2 * dtheta1**2
        + 0.5 * inertia * dtheta1**2
        + 0.5 * m * v2_sq
        + 0.5 * inertia * (dtheta1 + dtheta2) ** 2
    )
    potential = -g * ((m * lc + m * l1) * np.cos(theta1) + m * lc * np.cos(theta1 + theta2))
    return float(kinetic + potential)


def acrobot_energy_from_state(state):
    """Energy of a cos/sin-encoded acrobot observation."""
    theta1 = float(np.arctan2(state[1], state[0]))
    theta2 = float(np.arctan2(state[3], state[2]))
    return acrobot_energy_from_angles(theta1, theta2, float(state[4]), float(state[5]))
