"""Reduced-order LTI control model identification via DMDc.

Given aligned snapshot matrices (Z, Z', U), the fit solves
``Z' ~ A Z + B U`` in the least-squares sense with both operators unknown,
using two truncated SVDs: one of the stacked data ``[Z; U]`` (whose
pseudo-inverse is formed through it) and one of ``Z'`` (whose left singular
vectors become the output projection basis).  The returned operators live in
the reduced space spanned by that basis; the basis lifts them back when
predictions in the embedding space are needed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from ._validation import (
    as_float_matrix,
    as_float_vector,
    check_nonincreasing,
    require_finite,
)
from .embedding import EmbedConfig, SnapshotMatrices, build_snapshots, delay_embed
from .errors import DegenerateDataError, NumericalError, TrajectoryFormatError
from .trajectories import TrajectorySet, one_hot_encode

MODEL_FORMAT_TAG = "koopctl-model-v1"


# ---------------------------------------------------------------------------
# Rank selection
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EnergyRank:
    """Keep the smallest rank capturing ``fraction`` of squared-σ energy."""

    fraction: float

    def __post_init__(self):
        if not 0.0 < self.fraction < 1.0:
            raise ValueError("energy fraction must lie strictly in (0, 1)")


@dataclass(frozen=True)
class FixedRank:
    """Keep exactly ``r`` singular values (clipped to what is available)."""

    r: int

    def __post_init__(self):
        if self.r < 1:
            raise ValueError("fixed rank must be >= 1")


@dataclass(frozen=True)
class FullRank:
    """No truncation beyond the numerical-rank guard."""


RankRule = EnergyRank | FixedRank | FullRank


def parse_rank_rule(value) -> RankRule:
    """Interpret a user-facing rank setting.

    Floats strictly inside (0, 1) select an energy fraction, positive
    integers a fixed rank, and ``"full"`` (or None) no truncation.
    """
    if isinstance(value, (EnergyRank, FixedRank, FullRank)):
        return value
    if value is None:
        return FullRank()
    if isinstance(value, str):
        if value.lower() == "full":
            return FullRank()
        raise ValueError(f"unknown rank rule {value!r}")
    if isinstance(value, bool):
        raise ValueError("rank rule cannot be a boolean")
    if isinstance(value, int):
        return FixedRank(value)
    if isinstance(value, float):
        if 0.0 < value < 1.0:
            return EnergyRank(value)
        raise ValueError(
            f"fractional rank must be in (0, 1), integers allowed; got {value}"
        )
    raise ValueError(f"cannot interpret rank rule {value!r}")


def truncation_rank(singular_values, rule: RankRule) -> int:
    """Number of singular values retained under a rank rule.

    Parameters
    ----------
    singular_values : sequence of float
        Non-increasing, strictly positive.
    rule : RankRule
        ``FullRank`` keeps all; ``FixedRank(r)`` keeps ``min(r, len)``;
        ``EnergyRank(f)`` keeps the smallest prefix whose squared values
        reach fraction ``f`` of the total squared sum.
    """
    sigma = as_float_vector(singular_values, "singular_values")
    if sigma.size == 0:
        raise ValueError("singular value sequence is empty")
    if np.any(sigma <= 0):
        raise ValueError("singular values must be strictly positive")
    check_nonincreasing(sigma, "singular values")
    if isinstance(rule, FullRank):
        return int(sigma.size)
    if isinstance(rule, FixedRank):
        return int(min(rule.r, sigma.size))
    if isinstance(rule, EnergyRank):
        energy = np.cumsum(sigma**2)
        target = rule.fraction * energy[-1]
        return int(np.searchsorted(energy, target) + 1)
    raise TypeError(f"unknown rank rule {rule!r}")


# ---------------------------------------------------------------------------
# Model containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class KoopmanControlModel:
    """Reduced operators of the fitted LTI surrogate.

    Attributes
    ----------
    A_reduced : np.ndarray
        ``r x r`` dynamics operator; its spectrum is the object of analysis.
    B_reduced : np.ndarray
        ``r x q`` input operator.
    basis : np.ndarray
        ``n x r`` orthonormal output projection; ``basis @ A_reduced @
        basis.T`` is the lifted dynamics estimate.
    r : int
        Output (state) truncation rank.
    p : int
        Input-side truncation rank of the stacked-data SVD.
    n : int
        Lifted state dimension.
    q : int
        Input dimension.
    singular_values_omega : np.ndarray
        Positive singular values of the stacked data ``[Z; U]``.
    singular_values_output : np.ndarray
        Positive singular values of ``Z'``.
    state_dim : int
        Width of the leading "current state" block of the lifted state.
    n_delay : int
        Delay count used to build the lifted state.
    """

    A_reduced: np.ndarray
    B_reduced: np.ndarray
    basis: np.ndarray
    r: int
    p: int
    n: int
    q: int
    singular_values_omega: np.ndarray
    singular_values_output: np.ndarray
    state_dim: int
    n_delay: int

    def __post_init__(self):
        A = as_float_matrix(self.A_reduced, "A_reduced")
        B = as_float_matrix(self.B_reduced, "B_reduced")
        basis = as_float_matrix(self.basis, "basis")
        if A.shape != (self.r, self.r):
            raise ValueError("A_reduced must be r x r")
        if B.shape != (self.r, self.q):
            raise ValueError("B_reduced must be r x q")
        if basis.shape != (self.n, self.r):
            raise ValueError("basis must be n x r")
        gram = basis.T @ basis
        if not np.allclose(gram, np.eye(self.r), atol=1e-10):
            raise ValueError("basis columns must be orthonormal (1e-10)")
        check_nonincreasing(self.singular_values_omega, "singular_values_omega")
        check_nonincreasing(self.singular_values_output, "singular_values_output")

    def project(self, z: np.ndarray) -> np.ndarray:
        """Coordinates of a lifted state in the reduced space."""
        return self.basis.T @ z

    def lift(self, w: np.ndarray) -> np.ndarray:
        """Embed reduced coordinates back into the lifted space."""
        return self.basis @ w


@dataclass(frozen=True)
class FitDiagnostics:
    """One-step reconstruction quality of a fitted model."""

    mse_one_step: float
    m: int
    passed_gate: bool
    gate: float = 0.01

    def __post_init__(self):
        if self.mse_one_step < 0:
            raise ValueError("mse_one_step must be non-negative")
        if self.passed_gate != (self.mse_one_step < self.gate):
            raise ValueError("passed_gate inconsistent with mse and gate")


# ---------------------------------------------------------------------------
# Fitting
# ---------------------------------------------------------------------------

def _guarded_rank(sigma: np.ndarray, rule: RankRule, guard_dim: int) -> int:
    """Rank under ``rule``, capped so no near-zero singular value survives.

    Values below ``guard_dim * eps * sigma_1`` never enter an inversion,
    regardless of the rule.
    """
    if sigma.size == 0 or sigma[0] <= 0.0:
        return 0
    tol = guard_dim * np.finfo(float).eps * sigma[0]
    numerical = int(np.count_nonzero(sigma > tol))
    if numerical == 0:
        return 0
    return min(truncation_rank(sigma[:numerical], rule), numerical)


def fit_dmdc(
    snapshots: SnapshotMatrices,
    rule: RankRule,
    output_rule: RankRule | None = None,
) -> KoopmanControlModel:
    """Fit reduced (A, B) operators from snapshot matrices.

    The input-side SVD of ``[Z; U]`` and the output-side SVD of ``Z'`` are
    truncated with the same rule unless ``output_rule`` overrides the
    latter.  Both full singular-value sequences are retained on the model.

    Raises
    ------
    ValueError
        Fewer than 2 snapshot columns, or non-finite data.
    DegenerateDataError
        The stacked data matrix has no positive singular value.

    Notes
    -----
    When ``Z'`` is identically zero (all successors at the origin, as
    happens when standardization collapses constant data) the fit degrades
    to a documented trivial rank-1 model: basis ``e_1``, zero operators.
    """
    Z, Zp, U = snapshots.Z, snapshots.Zprime, snapshots.U
    n, q, m = snapshots.n, snapshots.q, snapshots.m
    if m < 2:
        raise ValueError(f"need at least 2 snapshot columns, got {m}")
    for name, arr in (("Z", Z), ("Zprime", Zp), ("U", U)):
        require_finite(arr, name)
    if output_rule is None:
        output_rule = rule

    omega = np.vstack([Z, U])
    U_om, s_om, Vt_om = np.linalg.svd(omega, full_matrices=False)
    p = _guarded_rank(s_om, rule, max(n + q, m))
    if p == 0:
        raise DegenerateDataError("stacked data matrix [Z; U] is zero")

    U_out, s_out, _ = np.linalg.svd(Zp, full_matrices=False)
    r = _guarded_rank(s_out, output_rule, max(n, m))
    if r == 0:
        # All successors are exactly zero: any operator pair fits.  Return
        # the trivial rank-1 model rather than failing the pipeline.
        basis = np.zeros((n, 1))
        basis[0, 0] = 1.0
        return KoopmanControlModel(
            A_reduced=np.zeros((1, 1)),
            B_reduced=np.zeros((1, q)),
            basis=basis,
            r=1,
            p=p,
            n=n,
            q=q,
            singular_values_omega=s_om[s_om > 0].copy(),
            singular_values_output=np.array([]),
            state_dim=snapshots.state_dim,
            n_delay=snapshots.n_delay,
        )

    U1 = U_om[:n, :p]
    U2 = U_om[n:, :p]
    basis = U_out[:, :r]
    # Zp @ V @ diag(1/s): the least-squares action of pinv([Z; U]) on Zp.
    P = Zp @ (Vt_om[:p].T / s_om[:p])
    G = basis.T @ P
    A_reduced = G @ (U1.T @ basis)
    B_reduced = G @ U2.T

    return KoopmanControlModel(
        A_reduced=A_reduced,
        B_reduced=B_reduced,
        basis=basis,
        r=r,
        p=p,
        n=n,
        q=q,
        singular_values_omega=s_om[s_om > 0].copy(),
        singular_values_output=s_out[s_out > 0].copy(),
        state_dim=snapshots.state_dim,
        n_delay=snapshots.n_delay,
    )


# ---------------------------------------------------------------------------
# Prediction and diagnostics
# ---------------------------------------------------------------------------

def predict_one_step(
    model: KoopmanControlModel, z: np.ndarray, u: np.ndarray
) -> np.ndarray:
    """One-step prediction ``basis (A basis^T z + B u)`` in the lifted space."""
    z = as_float_vector(z, "z")
    u = as_float_vector(u, "u")
    if z.shape[0] != model.n:
        raise ValueError(f"z has length {z.shape[0]}, model expects {model.n}")
    if u.shape[0] != model.q:
        raise ValueError(f"u has length {u.shape[0]}, model expects {model.q}")
    w = model.A_reduced @ (model.basis.T @ z) + model.B_reduced @ u
    return model.basis @ w


def rollout_model(model: KoopmanControlModel, z0, inputs) -> list[np.ndarray]:
    """Iterate the reduced dynamics from ``z0`` under an input sequence.

    The initial state is projected once; each step advances the reduced
    coordinates and lifts them for output, so the result has one lifted
    state per input.
    """
    z0 = as_float_vector(z0, "z0")
    if z0.shape[0] != model.n:
        raise ValueError(f"z0 has length {z0.shape[0]}, model expects {model.n}")
    w = model.basis.T @ z0
    out = []
    for step, u in enumerate(inputs):
        u = as_float_vector(u, "u")
        if u.shape[0] != model.q:
            raise ValueError(
                f"input {step} has length {u.shape[0]}, model expects {model.q}"
            )
        w = model.A_reduced @ w + model.B_reduced @ u
        if not np.all(np.isfinite(w)):
            raise NumericalError(f"non-finite prediction at step {step}")
        out.append(model.basis @ w)
    return out


def reconstruction_mse(
    model: KoopmanControlModel,
    snapshots: SnapshotMatrices,
    gate: float = 0.01,
) -> FitDiagnostics:
    """One-step mean-squared reconstruction error of the current-state block.

    Predictions and targets are compared on the leading ``state_dim`` rows
    (the newest state) in the scale the snapshots were built in, averaged
    over all ``m`` transitions and ``state_dim`` coordinates.
    """
    if snapshots.n != model.n or snapshots.q != model.q:
        raise ValueError("snapshot dimensions inconsistent with model")
    d = snapshots.state_dim
    W = model.A_reduced @ (model.basis.T @ snapshots.Z) + model.B_reduced @ snapshots.U
    pred = model.basis[:d] @ W
    err = pred - snapshots.Zprime[:d]
    mse = float(np.mean(err**2))
    return FitDiagnostics(
        mse_one_step=mse,
        m=snapshots.m,
        passed_gate=mse < gate,
        gate=gate,
    )


# ---------------------------------------------------------------------------
# Model file format
# ---------------------------------------------------------------------------

def serialize_model(model: KoopmanControlModel, meta: dict | None = None) -> bytes:
    """Emit a model as ``koopctl-model-v1`` newline-delimited records."""
    header = {
        "format": MODEL_FORMAT_TAG,
        "n": model.n,
        "q": model.q,
        "r": model.r,
        "p": model.p,
        "state_dim": model.state_dim,
        "n_delay": model.n_delay,
    }
    if meta:
        header["meta"] = json.loads(
            json.dumps(meta, separators=(",", ":"), sort_keys=True)
        )
    records = [header]
    for name in ("A_reduced", "B_reduced", "basis"):
        records.append(
            {"record": name, "data": [list(map(float, row)) for row in getattr(model, name)]}
        )
    for name in ("singular_values_omega", "singular_values_output"):
        records.append({"record": name, "data": [float(v) for v in getattr(model, name)]})
    lines = [json.dumps(rec, separators=(",", ":"), allow_nan=False) for rec in records]
    return ("\n".join(lines) + "\n").encode("utf-8")


def parse_model_file(data: bytes | str) -> KoopmanControlModel:
    """Parse a ``koopctl-model-v1`` byte stream back into a model."""
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    lines = [ln for ln in text.split("\n") if ln.strip()]
    if not lines:
        raise TrajectoryFormatError("empty model file", line=1)
    try:
        header = json.loads(lines[0])
    except ValueError as exc:
        raise TrajectoryFormatError(f"malformed record: {exc}", line=1)
    if not isinstance(header, dict) or header.get("format") != MODEL_FORMAT_TAG:
        raise TrajectoryFormatError(
            f"expected header with format={MODEL_FORMAT_TAG!r}", line=1
        )
    fields = {}
    for lineno, line in enumerate(lines[1:], start=2):
        try:
            rec = json.loads(line)
        except ValueError as exc:
            raise TrajectoryFormatError(f"malformed record: {exc}", line=lineno)
        if "record" not in rec or "data" not in rec:
            raise TrajectoryFormatError("expected record/data fields", line=lineno)
        fields[rec["record"]] = rec["data"]
    try:
        return KoopmanControlModel(
            A_reduced=np.array(fields["A_reduced"], dtype=float),
            B_reduced=np.array(fields["B_reduced"], dtype=float).reshape(
                header["r"], header["q"]
            ),
            basis=np.array(fields["basis"], dtype=float),
            r=int(header["r"]),
            p=int(header["p"]),
            n=int(header["n"]),
            q=int(header["q"]),
            singular_values_omega=np.array(
                fields["singular_values_omega"], dtype=float
            ),
            singular_values_output=np.array(
                fields["singular_values_output"], dtype=float
            ),
            state_dim=int(header["state_dim"]),
            n_delay=int(header["n_delay"]),
        )
    except KeyError as exc:
        raise TrajectoryFormatError(f"missing model record {exc}")


# ---------------------------------------------------------------------------
# Estimator API
# ---------------------------------------------------------------------------

class DMDc(BaseEstimator):
    """Snapshot-level estimator wrapping :func:`fit_dmdc`.

    Parameters
    ----------
    svd_rank : float | int | str
        Rank rule for both SVD truncations: a fraction in (0, 1), a fixed
        integer rank, or ``"full"``.
    svd_rank_output : float | int | str | None
        Optional separate rule for the output-side SVD.
    mse_gate : float
        Reconstruction-error threshold recorded in the diagnostics.

    Attributes
    ----------
    model_ : KoopmanControlModel
    diagnostics_ : FitDiagnostics
    """

    def __init__(self, svd_rank=0.95, svd_rank_output=None, mse_gate=0.01):
        self.svd_rank = svd_rank
        self.svd_rank_output = svd_rank_output
        self.mse_gate = mse_gate

    def fit(self, snapshots: SnapshotMatrices, y=None):
        rule = parse_rank_rule(self.svd_rank)
        out_rule = (
            parse_rank_rule(self.svd_rank_output)
            if self.svd_rank_output is not None
            else None
        )
        self.model_ = fit_dmdc(snapshots, rule, output_rule=out_rule)
        self.diagnostics_ = reconstruction_mse(
            self.model_, snapshots, gate=self.mse_gate
        )
        return self

    def predict(self, Z, U):
        """Columnwise one-step predictions for lifted states Z under inputs U."""
        self._check_fitted()
        Z = as_float_matrix(Z, "Z")
        U = as_float_matrix(U, "U")
        model = self.model_
        W = model.A_reduced @ (model.basis.T @ Z) + model.B_reduced @ U
        return model.basis @ W

    @property
    def eigenvalues_(self):
        self._check_fitted()
        return np.linalg.eigvals(self.model_.A_reduced)

    def _check_fitted(self):
        if not hasattr(self, "model_"):
            raise NotFittedError("DMDc is not fitted")


class TrajectoryDMDc(BaseEstimator):
    """Trajectory-level estimator: delay-embed a set, standardize, fit DMDc.

    Parameters
    ----------
    n_delay : int
        Delay-embedding window length.
    svd_rank : float | int | str
        Rank rule for the fit, as in :class:`DMDc`.
    standardize : bool
        Z-score states (fit on the set) before embedding.
    mse_gate : float
        Reconstruction-error threshold for the diagnostics.

    Attributes
    ----------
    model_ : KoopmanControlModel
    diagnostics_ : FitDiagnostics
    snapshots_ : SnapshotMatrices
    """

    def __init__(self, n_delay=4, svd_rank=0.95, standardize=True, mse_gate=0.01):
        self.n_delay = n_delay
        self.svd_rank = svd_rank
        self.standardize = standardize
        self.mse_gate = mse_gate

    def fit(self, traj_set: TrajectorySet, y=None):
        config = EmbedConfig(n_delay=self.n_delay, standardize=self.standardize)
        self.snapshots_ = build_snapshots(traj_set, config)
        rule = parse_rank_rule(self.svd_rank)
        self.model_ = fit_dmdc(self.snapshots_, rule)
        self.diagnostics_ = reconstruction_mse(
            self.model_, self.snapshots_, gate=self.mse_gate
        )
        return self

    def predict_rollout(self, states, actions):
        """Predict future states from an initial state window and actions.

        ``states`` must hold at least ``n_delay`` rows in the raw state
        scale; predictions are returned in the same scale, one row per
        action, each being the newest-state block of the rolled-out lifted
        state.
        """
        self._check_fitted()
        states = as_float_matrix(states, "states")
        model = self.model_
        d = model.state_dim
        if states.shape[0] < self.n_delay:
            raise ValueError(f"need at least {self.n_delay} seed states")
        if states.shape[1] != d:
            raise ValueError(f"states must have {d} columns")
        scaling = self.snapshots_.scaling
        if scaling is not None:
            states = (states - scaling.mean) / scaling.scale
        window = states[-self.n_delay :]
        z0 = delay_embed(window, self.n_delay)[-1]
        inputs = [one_hot_encode(a, model.q) for a in actions]
        lifted = rollout_model(model, z0, inputs)
        pred = np.array([z[:d] for z in lifted]) if lifted else np.empty((0, d))
        if scaling is not None and pred.size:
            pred = pred * scaling.scale + scaling.mean
        return pred

    def _check_fitted(self):
        if not hasattr(self, "model_"):
            raise NotFittedError("TrajectoryDMDc is not fitted")
