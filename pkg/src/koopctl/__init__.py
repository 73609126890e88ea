"""koopctl: LTI control surrogates for agent trajectories.

Fits discrete-time (A, B) operator pairs to recorded state/action
trajectories via DMDc on time-delay-embedded states, then tracks two
interpretable quantities across training checkpoints: the maximum
eigenvalue norm of A (stability of the closed-loop behavior) and the
normalized rank of the controllability matrix (how much of the fitted
state space the actions reach).  Includes deterministic benchmark
simulators, scripted policies of graded skill, a checkpoint-analysis
pipeline with hidden-progress detection, and a CLI.
"""

__version__ = "0.1.0"

from .dmdc import (
    DMDc,
    EnergyRank,
    FitDiagnostics,
    FixedRank,
    FullRank,
    KoopmanControlModel,
    TrajectoryDMDc,
    fit_dmdc,
    parse_model_file,
    parse_rank_rule,
    predict_one_step,
    reconstruction_mse,
    rollout_model,
    serialize_model,
    truncation_rank,
)
from .embedding import (
    DelayEmbedder,
    EmbedConfig,
    SnapshotMatrices,
    build_snapshots,
    delay_embed,
)
from .errors import (
    DegenerateDataError,
    KoopctlError,
    NumericalError,
    TrajectoryFormatError,
)
from .metrics import (
    ControllabilityReport,
    SpectrumReport,
    controllability_matrix,
    controllability_report,
    normalized_ctrb_rank,
    spectrum,
)
from .pipeline import (
    AnalysisConfig,
    CheckpointAggregate,
    HiddenProgressFlag,
    HPConfig,
    MetricRecord,
    RunSummary,
    TrendTrigger,
    analyze_checkpoint,
    detect_hidden_progress,
    emit_plots,
    emit_report,
    summarize_run,
)
from .trajectories import (
    EnvSpec,
    ScalingParams,
    StateScaler,
    Trajectory,
    TrajectorySet,
    apply_scaling,
    fit_scaling,
    invert_scaling,
    one_hot_encode,
    parse_trajectory_file,
    serialize_trajectory_file,
)

__all__ = [
    "AnalysisConfig",
    "CheckpointAggregate",
    "ControllabilityReport",
    "DMDc",
    "DegenerateDataError",
    "DelayEmbedder",
    "EmbedConfig",
    "EnergyRank",
    "EnvSpec",
    "FitDiagnostics",
    "FixedRank",
    "FullRank",
    "HPConfig",
    "HiddenProgressFlag",
    "KoopctlError",
    "KoopmanControlModel",
    "MetricRecord",
    "NumericalError",
    "RunSummary",
    "ScalingParams",
    "SnapshotMatrices",
    "SpectrumReport",
    "StateScaler",
    "Trajectory",
    "TrajectoryDMDc",
    "TrajectoryFormatError",
    "TrajectorySet",
    "TrendTrigger",
    "analyze_checkpoint",
    "apply_scaling",
    "build_snapshots",
    "controllability_matrix",
    "controllability_report",
    "delay_embed",
    "detect_hidden_progress",
    "emit_plots",
    "emit_report",
    "fit_dmdc",
    "fit_scaling",
    "invert_scaling",
    "normalized_ctrb_rank",
    "one_hot_encode",
    "parse_model_file",
    "parse_rank_rule",
    "predict_one_step",
    "reconstruction_mse",
    "rollout_model",
    "serialize_model",
    "serialize_trajectory_file",
    "spectrum",
    "summarize_run",
    "truncation_rank",
    "parse_trajectory_file",
]
