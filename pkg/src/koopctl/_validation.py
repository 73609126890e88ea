"""Input validation helpers used across the estimator API."""

import numpy as np


def as_float_matrix(x, name="X"):
    """Coerce to a 2-D float64 array, rejecting anything else."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {arr.shape}")
    return arr


def as_float_vector(x, name="x"):
    """Coerce to a 1-D float64 array, rejecting anything else."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-dimensional, got shape {arr.shape}")
    return arr


def require_finite(arr, name="array"):
    """Raise ValueError if any entry is NaN or infinite."""
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_columns(arr, n_cols, name="X"):
    """Raise ValueError unless ``arr`` has exactly ``n_cols`` columns."""
    if arr.shape[1] != n_cols:
        raise ValueError(
            f"{name} has {arr.shape[1]} columns, expected {n_cols}"
        )
    return arr


def check_nonincreasing(values, name="sequence"):
    """Raise ValueError unless ``values`` is non-increasing."""
    arr = np.asarray(values, dtype=float)
    if arr.size > 1 and np.any(np.diff(arr) > 0):
        raise ValueError(f"{name} must be non-increasing")
    return arr
