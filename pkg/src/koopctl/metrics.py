"""Stability and controllability metrics of a fitted control model.

Both metrics operate on the reduced operators: the spectrum of the r x r
``A_reduced`` and the rank of its controllability matrix, normalized by r
so that 1 means fully controllable.  Modes are lifted through the output
basis back into the embedding space.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._validation import as_float_matrix
from .dmdc import KoopmanControlModel
from .errors import NumericalError

DEFAULT_RANK_REL_TOL = 1e-10

# Entry magnitude above which a Krylov block is rescaled before the next
# multiply.  Positive per-block scaling leaves the rank unchanged.
_KRYLOV_RESCALE_LIMIT = 1e100


@dataclass(frozen=True, eq=False)
class SpectrumReport:
    """Eigenstructure of the reduced dynamics operator.

    Attributes
    ----------
    eigenvalues : np.ndarray
        Complex eigenvalues of ``A_reduced``, sorted by non-increasing
        modulus, ties by non-increasing real part.
    max_eig_norm : float
        Largest eigenvalue modulus, computed from the same moduli used for
        sorting.
    modes : np.ndarray
        Complex ``n x r`` matrix whose column k is the eigenvector of
        eigenvalue k lifted through the model basis.
    """

    eigenvalues: np.ndarray
    max_eig_norm: float
    modes: np.ndarray

    def __post_init__(self):
        if self.modes.shape[1] != self.eigenvalues.shape[0]:
            raise ValueError("modes must have one column per eigenvalue")
        if self.max_eig_norm < 0:
            raise ValueError("max_eig_norm must be non-negative")


@dataclass(frozen=True, eq=False)
class ControllabilityReport:
    """Numerical rank of the controllability matrix.

    Attributes
    ----------
    rank : int
        Count of singular values above ``tolerance_used``.
    normalized_rank : float
        ``rank / r``; 1 means the fitted state space is fully reachable.
    singular_values : np.ndarray
        Non-increasing singular values of the (possibly rescaled)
        controllability matrix.
    tolerance_used : float
        Absolute threshold the rank was decided against.
    block_scales : np.ndarray
        Positive factor each Krylov block was multiplied by before the SVD;
        all ones unless the overflow guard engaged.
    """

    rank: int
    normalized_rank: float
    singular_values: np.ndarray
    tolerance_used: float
    block_scales: np.ndarray = field(default_factory=lambda: np.array([1.0]))

    def __post_init__(self):
        if not 0.0 <= self.normalized_rank <= 1.0:
            raise ValueError("normalized_rank must lie in [0, 1]")
        if self.tolerance_used <= 0:
            raise ValueError("tolerance_used must be positive")
        if int(np.count_nonzero(self.singular_values > self.tolerance_used)) != self.rank:
            raise ValueError("rank inconsistent with singular values and tolerance")


def spectrum(model: KoopmanControlModel) -> SpectrumReport:
    """Eigendecompose the reduced operator and lift its modes.

    Raises
    ------
    NumericalError
        The eigensolver failed to converge.
    """
    try:
        eigenvalues, W = np.linalg.eig(model.A_reduced)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolver failed on A_reduced: {exc}")
    moduli = np.abs(eigenvalues)
    order = np.lexsort((-eigenvalues.imag, -eigenvalues.real, -moduli))
    return SpectrumReport(
        eigenvalues=eigenvalues[order],
        max_eig_norm=float(moduli.max()),
        modes=model.basis.astype(complex) @ W[:, order],
    )


def controllability_matrix(A, B) -> np.ndarray:
    """Horizontal concatenation of ``A^k B`` for k = 0..r-1.

    Powers are accumulated by iterated multiplication, never formed
    explicitly.
    """
    A = as_float_matrix(A, "A")
    B = as_float_matrix(B, "B")
    r = A.shape[0]
    if A.shape != (r, r):
        raise ValueError("A must be square")
    if B.shape[0] != r:
        raise ValueError("B must have as many rows as A")
    blocks = [B]
    for _ in range(r - 1):
        blocks.append(A @ blocks[-1])
    return np.hstack(blocks)


def controllability_report(A, B, rel_tol: float = DEFAULT_RANK_REL_TOL) -> ControllabilityReport:
    """Numerical controllability rank of a raw (A, B) pair.

    The rank is the count of singular values of ``[B, AB, ..., A^{r-1}B]``
    above ``rel_tol * sigma_1``; a zero matrix has rank 0.  When an
    intermediate Krylov block grows past the overflow limit it is rescaled
    by a positive factor (recorded per block), which cannot change the
    rank.
    """
    if rel_tol <= 0:
        raise ValueError("rel_tol must be positive")
    A = as_float_matrix(A, "A")
    B = as_float_matrix(B, "B")
    r = A.shape[0]
    if A.shape != (r, r):
        raise ValueError("A must be square")
    if B.shape[0] != r:
        raise ValueError("B must have as many rows as A")

    blocks = [B]
    scales = [1.0]
    for _ in range(r - 1):
        nxt = A @ blocks[-1]
        scale = scales[-1]
        peak = np.max(np.abs(nxt)) if nxt.size else 0.0
        if peak > _KRYLOV_RESCALE_LIMIT:
            nxt = nxt / peak
            scale = scale / peak
        blocks.append(nxt)
        scales.append(scale)
    ctrb = np.hstack(blocks)

    sigma = np.linalg.svd(ctrb, compute_uv=False)
    sigma_1 = sigma[0] if sigma.size else 0.0
    tol = rel_tol * sigma_1 if sigma_1 > 0 else rel_tol
    rank = int(np.count_nonzero(sigma > tol))
    return ControllabilityReport(
        rank=rank,
        normalized_rank=rank / r,
        singular_values=sigma,
        tolerance_used=tol,
        block_scales=np.array(scales),
    )


def normalized_ctrb_rank(
    model: KoopmanControlModel, rel_tol: float = DEFAULT_RANK_REL_TOL
) -> ControllabilityReport:
    """Controllability report for the reduced operators of a fitted model."""
    return controllability_report(model.A_reduced, model.B_reduced, rel_tol)
