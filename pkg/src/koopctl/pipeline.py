"""Checkpoint analysis, cross-seed aggregation, and hidden-progress detection.

One fitted model per (checkpoint, seed) trajectory set yields a
MetricRecord; records aggregate into per-checkpoint means with standard
errors over gate-passing seeds; a sliding-window rule then looks for
stretches where reward is flat while the stability or controllability
metric trends, the "hidden progress" signature.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .dmdc import FullRank, RankRule, fit_dmdc, reconstruction_mse
from .embedding import EmbedConfig, build_snapshots
from .metrics import DEFAULT_RANK_REL_TOL, normalized_ctrb_rank, spectrum
from .trajectories import TrajectorySet

REPORT_FORMAT_TAG = "koopctl-report-v1"

_REPORT_COLUMNS = (
    "checkpoint",
    "seed",
    "max_eig_norm",
    "normalized_ctrb_rank",
    "reduced_rank_r",
    "mse_one_step",
    "passed_gate",
    "median_reward",
    "trial_count",
)
_SUMMARY_COLUMNS = (
    "checkpoint",
    "n_seeds",
    "n_gate_failures",
    "mean_median_reward",
    "se_median_reward",
    "mean_max_eig_norm",
    "se_max_eig_norm",
    "mean_normalized_ctrb_rank",
    "se_normalized_ctrb_rank",
    "r_values",
)


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HPConfig:
    """Hidden-progress detection thresholds.

    Attributes
    ----------
    window : int
        Number of consecutive checkpoints per sliding window, at least 3.
    reward_flat_frac : float
        Reward counts as flat when |window slope x window span| stays under
        this fraction of the global reward range (floored at 1).
    trend_t_threshold : float
        Magnitude the slope t-statistic must exceed for a metric to trend.
    """

    window: int = 3
    reward_flat_frac: float = 0.05
    trend_t_threshold: float = 2.0

    def __post_init__(self):
        if self.window < 3:
            raise ValueError("window must be >= 3")
        if self.reward_flat_frac <= 0:
            raise ValueError("reward_flat_frac must be positive")
        if self.trend_t_threshold <= 0:
            raise ValueError("trend_t_threshold must be positive")


@dataclass(frozen=True)
class AnalysisConfig:
    """Everything a checkpoint analysis needs besides the data."""

    embed: EmbedConfig = field(default_factory=lambda: EmbedConfig(n_delay=4))
    rank_rule: RankRule = field(default_factory=FullRank)
    ctrb_rel_tol: float = DEFAULT_RANK_REL_TOL
    mse_gate: float = 0.01
    hidden_progress: HPConfig = HPConfig()

    def __post_init__(self):
        if self.mse_gate <= 0:
            raise ValueError("mse_gate must be positive")
        if self.ctrb_rel_tol <= 0:
            raise ValueError("ctrb_rel_tol must be positive")


# ---------------------------------------------------------------------------
# Records and summaries
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MetricRecord:
    """Per-(checkpoint, seed) analysis result."""

    checkpoint: int
    seed: int
    max_eig_norm: float
    normalized_ctrb_rank: float
    reduced_rank_r: int
    mse_one_step: float
    passed_gate: bool
    median_reward: float
    trial_count: int

    def __post_init__(self):
        if self.trial_count < 1:
            raise ValueError("trial_count must be >= 1")
        if not 0.0 <= self.normalized_ctrb_rank <= 1.0:
            raise ValueError("normalized_ctrb_rank must lie in [0, 1]")


@dataclass(frozen=True)
class CheckpointAggregate:
    """Cross-seed aggregates at one checkpoint, gate-passing records only.

    Means and standard errors are None when no seed passed the gate; the
    checkpoint is still reported rather than dropped.
    """

    checkpoint: int
    n_seeds: int
    n_gate_failures: int
    mean_median_reward: float | None
    se_median_reward: float | None
    mean_max_eig_norm: float | None
    se_max_eig_norm: float | None
    mean_normalized_ctrb_rank: float | None
    se_normalized_ctrb_rank: float | None
    r_values: tuple[int, ...]


@dataclass(frozen=True, eq=False)
class RunSummary:
    """Sorted per-checkpoint aggregates plus the records behind them.

    The raw records ride along so trend statistics can be computed at the
    seed level, not only from the aggregates.
    """

    checkpoints: tuple[CheckpointAggregate, ...]
    records: tuple[MetricRecord, ...]

    @property
    def rank_varies(self) -> bool:
        """True when the reduced rank differs across checkpoints."""
        ranks = {r for agg in self.checkpoints for r in agg.r_values}
        return len(ranks) > 1


@dataclass(frozen=True)
class TrendTrigger:
    """One metric trend that contributed to a hidden-progress flag."""

    metric: str
    direction: int  # +1 upward, -1 downward
    t_stat: float


@dataclass(frozen=True)
class HiddenProgressFlag:
    """A window where reward is flat but a fit metric trends."""

    checkpoints: tuple[int, ...]
    triggers: tuple[TrendTrigger, ...]


# ---------------------------------------------------------------------------
# Per-checkpoint analysis
# ---------------------------------------------------------------------------

def _lower_median(values) -> float:
    """Median taking the lower of the two middle values for even counts,
    avoiding interpolation artifacts on integer-valued rewards."""
    ordered = sorted(values)
    return float(ordered[(len(ordered) - 1) // 2])


def analyze_checkpoint(traj_set: TrajectorySet, config: AnalysisConfig) -> MetricRecord:
    """Fit one model to a (checkpoint, seed) trajectory set and score it.

    Identical constant trajectories standardize to the origin and produce
    the documented trivial rank-1 fit rather than an error; its reported
    eigenvalue norm is then 0 and the constant lives entirely in the
    scaling mean.
    """
    tags = {(t.checkpoint, t.seed) for t in traj_set}
    if len(tags) > 1:
        raise ValueError(f"trajectory set mixes (checkpoint, seed) tags: {sorted(tags)}")
    checkpoint, seed = next(iter(tags))

    snapshots = build_snapshots(traj_set, config.embed)
    model = fit_dmdc(snapshots, config.rank_rule)
    diagnostics = reconstruction_mse(model, snapshots, gate=config.mse_gate)
    spectral = spectrum(model)
    ctrb = normalized_ctrb_rank(model, config.ctrb_rel_tol)

    return MetricRecord(
        checkpoint=checkpoint,
        seed=seed,
        max_eig_norm=spectral.max_eig_norm,
        normalized_ctrb_rank=ctrb.normalized_rank,
        reduced_rank_r=model.r,
        mse_one_step=diagnostics.mse_one_step,
        passed_gate=diagnostics.passed_gate,
        median_reward=_lower_median(traj_set.rewards()),
        trial_count=len(traj_set),
    )


# ---------------------------------------------------------------------------
# Aggregation
# ---------------------------------------------------------------------------

def _mean_se(values: list[float]) -> tuple[float | None, float | None]:
    """Mean and standard error (sample std / sqrt(k)); SE 0 when k = 1."""
    k = len(values)
    if k == 0:
        return None, None
    if k == 1:
        return float(values[0]), 0.0
    arr = np.asarray(values)
    return float(arr.mean()), float(arr.std(ddof=1) / math.sqrt(k))


def summarize_run(records) -> RunSummary:
    """Aggregate records per checkpoint over gate-passing seeds."""
    records = tuple(records)
    if not records:
        raise ValueError("no records to summarize")
    keys = [(r.checkpoint, r.seed) for r in records]
    if len(set(keys)) != len(keys):
        raise ValueError("duplicate (checkpoint, seed) records")

    by_checkpoint: dict[int, list[MetricRecord]] = {}
    for record in records:
        by_checkpoint.setdefault(record.checkpoint, []).append(record)

    aggregates = []
    for checkpoint in sorted(by_checkpoint):
        group = by_checkpoint[checkpoint]
        passing = [r for r in group if r.passed_gate]
        mean_rew, se_rew = _mean_se([r.median_reward for r in passing])
        mean_eig, se_eig = _mean_se([r.max_eig_norm for r in passing])
        mean_ctrb, se_ctrb = _mean_se([r.normalized_ctrb_rank for r in passing])
        aggregates.append(
            CheckpointAggregate(
                checkpoint=checkpoint,
                n_seeds=len(passing),
                n_gate_failures=len(group) - len(passing),
                mean_median_reward=mean_rew,
                se_median_reward=se_rew,
                mean_max_eig_norm=mean_eig,
                se_max_eig_norm=se_eig,
                mean_normalized_ctrb_rank=mean_ctrb,
                se_normalized_ctrb_rank=se_ctrb,
                r_values=tuple(sorted({r.reduced_rank_r for r in passing})),
            )
        )
    return RunSummary(checkpoints=tuple(aggregates), records=records)


# ---------------------------------------------------------------------------
# Hidden-progress detection
# ---------------------------------------------------------------------------

def _slope(x: np.ndarray, y: np.ndarray) -> float:
    xbar = x.mean()
    sxx = float(((x - xbar) ** 2).sum())
    return float(((x - xbar) * (y - y.mean())).sum() / sxx)


def _slope_t_stat(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """OLS slope and its t-statistic over seed-level points.

    A perfect linear fit (zero residual) gives t = +/-inf with the slope's
    sign, or 0 for a zero slope.
    """
    n = x.size
    xbar = x.mean()
    sxx = float(((x - xbar) ** 2).sum())
    slope = float(((x - xbar) * (y - y.mean())).sum() / sxx)
    intercept = float(y.mean() - slope * xbar)
    sse = float(((y - (intercept + slope * x)) ** 2).sum())
    if sse <= 0.0:
        return slope, math.copysign(math.inf, slope) if slope != 0.0 else 0.0
    se = math.sqrt(sse / (n - 2) / sxx)
    return slope, slope / se


def detect_hidden_progress(summary: RunSummary, hp: HPConfig) -> list[HiddenProgressFlag]:
    """Flag windows where reward stays flat while a fit metric trends.

    For each window of ``hp.window`` consecutive checkpoints: reward is
    flat when the least-squares slope of the mean reward, times the window
    span, is smaller in magnitude than ``reward_flat_frac`` of the global
    reward range (floored at 1).  A metric trends when the t-statistic of
    its slope over the window's gate-passing seed-level records exceeds
    ``trend_t_threshold`` in magnitude.  A flag fires when reward is flat
    and max_eig_norm trends downward or normalized_ctrb_rank trends
    upward.  Windows containing a checkpoint with no gate-passing seed are
    skipped.
    """
    aggregates = summary.checkpoints
    if len(aggregates) < hp.window:
        raise ValueError(
            f"need at least {hp.window} checkpoints, got {len(aggregates)}"
        )

    reward_means = [
        a.mean_median_reward for a in aggregates if a.mean_median_reward is not None
    ]
    if not reward_means:
        return []
    reward_range = max(max(reward_means) - min(reward_means), 1.0)
    flat_limit = hp.reward_flat_frac * reward_range

    flags = []
    for start in range(len(aggregates) - hp.window + 1):
        window = aggregates[start : start + hp.window]
        if any(a.mean_median_reward is None for a in window):
            continue
        x = np.array([a.checkpoint for a in window], dtype=float)
        y = np.array([a.mean_median_reward for a in window])
        span = float(x[-1] - x[0])
        if abs(_slope(x, y) * span) >= flat_limit:
            continue

        window_ids = {a.checkpoint for a in window}
        points = [
            r
            for r in summary.records
            if r.passed_gate and r.checkpoint in window_ids
        ]
        px = np.array([r.checkpoint for r in points], dtype=float)
        triggers = []
        for metric, wanted_direction in (
            ("max_eig_norm", -1),
            ("normalized_ctrb_rank", +1),
        ):
            py = np.array([getattr(r, metric) for r in points])
            slope, t_stat = _slope_t_stat(px, py)
            direction = 1 if slope > 0 else -1
            if direction == wanted_direction and abs(t_stat) > hp.trend_t_threshold:
                triggers.append(
                    TrendTrigger(metric=metric, direction=direction, t_stat=t_stat)
                )
        if triggers:
            flags.append(
                HiddenProgressFlag(
                    checkpoints=tuple(a.checkpoint for a in window),
                    triggers=tuple(triggers),
                )
            )
    return flags


# ---------------------------------------------------------------------------
# Report emission
# ---------------------------------------------------------------------------

def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def _json_number(value: float):
    """Non-finite floats cannot ride in strict JSON; ship them as strings."""
    return value if math.isfinite(value) else repr(value)


def emit_report(
    summary: RunSummary,
    records,
    format: str,
    flags=None,
    meta: dict | None = None,
) -> bytes:
    """Render records plus aggregates as csv or jsonl bytes.

    Output is byte-identical for identical inputs: fixed column order,
    records sorted by (checkpoint, seed), shortest round-trip float text.
    """
    records = sorted(records, key=lambda r: (r.checkpoint, r.seed))
    if format == "csv":
        return _emit_csv(summary, records, flags, meta)
    if format == "jsonl":
        return _emit_jsonl(summary, records, flags, meta)
    raise ValueError(f"unknown report format {format!r}")


def _emit_csv(summary, records, flags, meta) -> bytes:
    buf = io.StringIO()
    buf.write(f"# {REPORT_FORMAT_TAG}\n")
    if meta:
        buf.write("# meta: ")
        buf.write(json.dumps(meta, separators=(",", ":"), sort_keys=True))
        buf.write("\n")
    if summary.rank_varies:
        buf.write("# note: reduced rank r varies across checkpoints\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_REPORT_COLUMNS)
    for r in records:
        writer.writerow([_cell(getattr(r, col)) for col in _REPORT_COLUMNS])
    buf.write("\n# summary\n")
    writer.writerow(_SUMMARY_COLUMNS)
    for agg in summary.checkpoints:
        row = [_cell(getattr(agg, col)) for col in _SUMMARY_COLUMNS[:-1]]
        row.append(";".join(str(r) for r in agg.r_values))
        writer.writerow(row)
    if flags:
        buf.write("\n# hidden_progress\n")
        writer.writerow(("window_start", "window_end", "metric", "direction", "t_stat"))
        for flag in flags:
            for trig in flag.triggers:
                writer.writerow(
                    [
                        flag.checkpoints[0],
                        flag.checkpoints[-1],
                        trig.metric,
                        trig.direction,
                        _cell(_json_number(trig.t_stat)),
                    ]
                )
    return buf.getvalue().encode("utf-8")


def _emit_jsonl(summary, records, flags, meta) -> bytes:
    def dump(obj) -> str:
        return json.dumps(obj, separators=(",", ":"), allow_nan=False)

    header = {"format": REPORT_FORMAT_TAG}
    if meta:
        header["meta"] = json.loads(json.dumps(meta, sort_keys=True))
    if summary.rank_varies:
        header["rank_varies"] = True
    lines = [dump(header)]
    for r in records:
        rec = {"record": "metric"}
        rec.update({col: getattr(r, col) for col in _REPORT_COLUMNS})
        lines.append(dump(rec))
    for agg in summary.checkpoints:
        rec = {"record": "summary"}
        rec.update({col: getattr(agg, col) for col in _SUMMARY_COLUMNS[:-1]})
        rec["r_values"] = list(agg.r_values)
        lines.append(dump(rec))
    for flag in flags or ():
        lines.append(
            dump(
                {
                    "record": "hp_flag",
                    "checkpoints": list(flag.checkpoints),
                    "triggers": [
                        {
                            "metric": t.metric,
                            "direction": t.direction,
                            "t_stat": _json_number(t.t_stat),
                        }
                        for t in flag.triggers
                    ],
                }
            )
        )
    return ("\n".join(lines) + "\n").encode("utf-8")


# ---------------------------------------------------------------------------
# Plots
# ---------------------------------------------------------------------------

_PLOT_SPECS = (
    ("reward", "mean_median_reward", "se_median_reward", "Median reward"),
    ("max_eig_norm", "mean_max_eig_norm", "se_max_eig_norm", "Max eigenvalue norm"),
    (
        "ctrb_rank",
        "mean_normalized_ctrb_rank",
        "se_normalized_ctrb_rank",
        "Normalized controllability rank",
    ),
)


def _inject_svg_header(path, meta: dict) -> None:
    """Insert the reproducibility header as an XML comment after the
    declaration line; the file stays well-formed SVG."""
    payload = json.dumps(meta, separators=(",", ":"), sort_keys=True)
    # XML comments must not contain "--".
    payload = payload.replace("--", "- -")
    text = path.read_text(encoding="utf-8")
    first_newline = text.index("\n") + 1
    text = text[:first_newline] + f"<!-- {payload} -->\n" + text[first_newline:]
    path.write_text(text, encoding="utf-8")


def emit_plots(summary: RunSummary, prefix, flags=None, meta: dict | None = None) -> list:
    """Write three SVG training-curve plots: mean line, +/-SE band,
    hidden-progress windows shaded.

    Rendering is pinned for byte-identical output across runs (fixed hash
    salt, no embedded date).
    """
    from pathlib import Path

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    aggregates = [a for a in summary.checkpoints if a.mean_median_reward is not None]
    if len(aggregates) < 2:
        raise ValueError("need at least 2 checkpoints with aggregates to plot")

    matplotlib.rcParams["svg.hashsalt"] = "koopctl"
    x = [a.checkpoint for a in aggregates]
    paths = []
    for suffix, mean_field, se_field, label in _PLOT_SPECS:
        mean = np.array([getattr(a, mean_field) for a in aggregates])
        se = np.array([getattr(a, se_field) for a in aggregates])
        fig, ax = plt.subplots(figsize=(5.0, 3.2))
        ax.plot(x, mean, color="tab:blue")
        ax.fill_between(x, mean - se, mean + se, color="tab:blue", alpha=0.25)
        for flag in flags or ():
            ax.axvspan(
                flag.checkpoints[0], flag.checkpoints[-1], color="tab:orange", alpha=0.2
            )
        ax.set_xlabel("checkpoint")
        ax.set_ylabel(label)
        ax.set_xticks(x)
        fig.tight_layout()
        path = Path(f"{prefix}_{suffix}.svg")
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
        if meta:
            _inject_svg_header(path, meta)
        paths.append(path)
    return paths
