"""Command-line interface: rollout, fit, analyze.

Exit codes: 0 success (including reconstruction-gate warnings), 2 usage
or validation errors, 3 I/O failures, 4 numerical failures.  Every output
file carries a reproducibility header with the tool version, the fully
resolved configuration, and digests of the input files, so a run can be
re-executed and compared byte for byte.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .dmdc import (
    fit_dmdc,
    parse_rank_rule,
    reconstruction_mse,
    serialize_model,
)
from .embedding import EmbedConfig, build_snapshots
from .errors import (
    DegenerateDataError,
    KoopctlError,
    NumericalError,
    TrajectoryFormatError,
)
from .metrics import normalized_ctrb_rank, spectrum
from .pipeline import (
    AnalysisConfig,
    HPConfig,
    analyze_checkpoint,
    detect_hidden_progress,
    emit_plots,
    emit_report,
    summarize_run,
)
from .sim import get_environment, make_policy, rollout_set
from .sim.policies import MixturePolicy
from .trajectories import (
    TrajectorySet,
    parse_trajectory_file,
    serialize_trajectory_file,
)

_ROLLOUT_DEFAULTS = {
    "env": None,
    "policy": None,
    "trials": 100,
    "max_steps": 200,
    "seed": 0,
    "checkpoint": 0,
    "explore_prob": None,
    "policy_params": {},
    "out": None,
}
_FIT_DEFAULTS = {
    "input": None,
    "n_delay": 4,
    "svd_rank": 0.95,
    "standardize": True,
    "mse_gate": 0.01,
    "ctrb_rel_tol": 1e-10,
    "out_model": None,
}
_ANALYZE_DEFAULTS = {
    "inputs": None,
    "n_delay": 4,
    "svd_rank": 0.95,
    "standardize": True,
    "mse_gate": 0.01,
    "ctrb_rel_tol": 1e-10,
    "window": 3,
    "reward_flat_frac": 0.05,
    "trend_t_threshold": 2.0,
    "report_format": "jsonl",
    "out_prefix": "report",
    "no_plots": False,
}


def _parse_rank_arg(text: str):
    """CLI rank syntax: integer, fraction in (0, 1), or ``full``."""
    if text == "full":
        return "full"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid rank {text!r}")
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError(
            "fractional rank must be in (0,1), integers allowed"
        )
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="koopctl",
        description="Fit LTI control surrogates to agent trajectories and "
        "track stability and controllability across checkpoints.",
    )
    parser.add_argument("--version", action="version", version=f"koopctl {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_roll = sub.add_parser("rollout", help="generate trajectories")
    p_roll.add_argument("--env", choices=["cartpole", "acrobot", "lander"])
    p_roll.add_argument("--policy")
    p_roll.add_argument("--trials", type=int)
    p_roll.add_argument("--max-steps", type=int, dest="max_steps")
    p_roll.add_argument("--seed", type=int)
    p_roll.add_argument("--checkpoint", type=int)
    p_roll.add_argument(
        "--explore-prob",
        type=float,
        dest="explore_prob",
        help="wrap the policy to explore uniformly with this probability",
    )
    p_roll.add_argument("--out")
    p_roll.add_argument("--config", help="JSON config overriding defaults")
    p_roll.set_defaults(func=cmd_rollout, defaults=_ROLLOUT_DEFAULTS)

    p_fit = sub.add_parser("fit", help="fit one model from a trajectory file")
    p_fit.add_argument("--in", dest="input")
    p_fit.add_argument("--n-delay", type=int, dest="n_delay")
    p_fit.add_argument("--svd-rank", type=_parse_rank_arg, dest="svd_rank")
    p_fit.add_argument(
        "--no-standardize", action="store_false", dest="standardize", default=None
    )
    p_fit.add_argument("--mse-gate", type=float, dest="mse_gate")
    p_fit.add_argument("--ctrb-rel-tol", type=float, dest="ctrb_rel_tol")
    p_fit.add_argument("--out-model", dest="out_model")
    p_fit.add_argument("--config")
    p_fit.set_defaults(func=cmd_fit, defaults=_FIT_DEFAULTS)

    p_an = sub.add_parser("analyze", help="analyze a checkpoint series")
    p_an.add_argument("--in", dest="inputs", nargs="+")
    p_an.add_argument("--n-delay", type=int, dest="n_delay")
    p_an.add_argument("--svd-rank", type=_parse_rank_arg, dest="svd_rank")
    p_an.add_argument(
        "--no-standardize", action="store_false", dest="standardize", default=None
    )
    p_an.add_argument("--mse-gate", type=float, dest="mse_gate")
    p_an.add_argument("--ctrb-rel-tol", type=float, dest="ctrb_rel_tol")
    p_an.add_argument("--window", type=int)
    p_an.add_argument("--reward-flat-frac", type=float, dest="reward_flat_frac")
    p_an.add_argument("--trend-t-threshold", type=float, dest="trend_t_threshold")
    p_an.add_argument(
        "--format", choices=["csv", "jsonl"], dest="report_format"
    )
    p_an.add_argument("--out-prefix", dest="out_prefix")
    p_an.add_argument("--no-plots", action="store_true", dest="no_plots", default=None)
    p_an.add_argument("--config")
    p_an.set_defaults(func=cmd_analyze, defaults=_ANALYZE_DEFAULTS)
    return parser


# ---------------------------------------------------------------------------
# Config resolution and reproducibility metadata
# ---------------------------------------------------------------------------

def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    text = Path(path).read_text(encoding="utf-8")
    try:
        config = json.loads(
            text,
            parse_constant=lambda v: (_ for _ in ()).throw(
                ValueError(f"non-finite literal {v!r} not allowed")
            ),
        )
    except ValueError as exc:
        raise ValueError(f"config file {path}: {exc}")
    if not isinstance(config, dict):
        raise ValueError(f"config file {path}: top level must be an object")
    return config


def _resolve(args, config: dict) -> dict:
    """Merge built-in defaults, config file values, then explicit flags."""
    resolved = dict(args.defaults)
    for key, value in config.items():
        if key not in resolved:
            raise ValueError(f"unknown config key {key!r}")
        resolved[key] = value
    for key in resolved:
        cli_value = getattr(args, key, None)
        if cli_value is not None:
            resolved[key] = cli_value
    return resolved


def _digest(path: Path, data: bytes) -> tuple[str, str]:
    return str(path), hashlib.sha256(data).hexdigest()


def _meta(resolved: dict, inputs: dict | None = None) -> dict:
    meta = {"tool": f"koopctl {__version__}", "config": resolved}
    if inputs:
        meta["inputs"] = inputs
    return meta


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_rollout(args) -> int:
    cfg = _resolve(args, _load_config(args.config))
    for key in ("env", "policy", "out"):
        if cfg[key] is None:
            raise ValueError(f"missing required argument --{key}")
    if cfg["trials"] < 1:
        raise ValueError("--trials must be >= 1")
    if cfg["max_steps"] < 1:
        raise ValueError("--max-steps must be >= 1")

    env = get_environment(cfg["env"])
    policy = make_policy(
        cfg["policy"], cfg["env"], seed=cfg["seed"], **cfg["policy_params"]
    )
    if cfg["explore_prob"] is not None:
        policy = MixturePolicy(
            policy,
            env.spec.action_count,
            explore_prob=cfg["explore_prob"],
            seed=cfg["seed"],
        )
    traj_set = rollout_set(
        env,
        policy,
        trials=cfg["trials"],
        max_steps=cfg["max_steps"],
        seed=cfg["seed"],
        checkpoint=cfg["checkpoint"],
    )
    traj_set = traj_set.with_meta({**traj_set.meta, **_meta(cfg)})
    out = Path(cfg["out"])
    out.write_bytes(serialize_trajectory_file(traj_set))
    rewards = sorted(traj_set.rewards())
    median = rewards[(len(rewards) - 1) // 2]
    print(f"wrote {len(traj_set)} trials to {out}; median reward {median:g}")
    return 0


def _read_sets(paths: list[str]) -> tuple[list[TrajectorySet], dict]:
    sets = []
    digests = {}
    for raw in paths:
        path = Path(raw)
        data = path.read_bytes()
        try:
            sets.append(parse_trajectory_file(data))
        except TrajectoryFormatError as exc:
            raise TrajectoryFormatError(f"{path}: {exc}")
        key, value = _digest(path, data)
        digests[key] = value
    return sets, digests


def cmd_fit(args) -> int:
    cfg = _resolve(args, _load_config(args.config))
    if cfg["input"] is None:
        raise ValueError("missing required argument --in")
    sets, digests = _read_sets([cfg["input"]])
    traj_set = sets[0]

    snapshots = build_snapshots(
        traj_set, EmbedConfig(n_delay=cfg["n_delay"], standardize=cfg["standardize"])
    )
    model = fit_dmdc(snapshots, parse_rank_rule(cfg["svd_rank"]))
    diagnostics = reconstruction_mse(model, snapshots, gate=cfg["mse_gate"])
    spectral = spectrum(model)
    ctrb = normalized_ctrb_rank(model, cfg["ctrb_rel_tol"])

    print(f"max_eig_norm: {spectral.max_eig_norm:.6f}")
    print(f"normalized_ctrb_rank: {ctrb.normalized_rank:.6f}")
    print(f"r: {model.r}")
    print(f"mse: {diagnostics.mse_one_step:.6g}")
    if not diagnostics.passed_gate:
        print(
            f"warning: reconstruction mse {diagnostics.mse_one_step:.6g} "
            f"exceeds gate {cfg['mse_gate']:g}",
            file=sys.stderr,
        )
    if cfg["out_model"] is not None:
        data = serialize_model(model, meta=_meta(cfg, digests))
        Path(cfg["out_model"]).write_bytes(data)
    return 0


def cmd_analyze(args) -> int:
    cfg = _resolve(args, _load_config(args.config))
    if not cfg["inputs"]:
        raise ValueError("missing required argument --in")
    sets, digests = _read_sets(cfg["inputs"])

    env = sets[0].env
    for traj_set in sets[1:]:
        if traj_set.env != env:
            raise ValueError("input files disagree on the environment header")

    groups: dict[tuple[int, int], list] = {}
    for traj_set in sets:
        for traj in traj_set:
            groups.setdefault((traj.checkpoint, traj.seed), []).append(traj)

    analysis = AnalysisConfig(
        embed=EmbedConfig(n_delay=cfg["n_delay"], standardize=cfg["standardize"]),
        rank_rule=parse_rank_rule(cfg["svd_rank"]),
        ctrb_rel_tol=cfg["ctrb_rel_tol"],
        mse_gate=cfg["mse_gate"],
        hidden_progress=HPConfig(
            window=cfg["window"],
            reward_flat_frac=cfg["reward_flat_frac"],
            trend_t_threshold=cfg["trend_t_threshold"],
        ),
    )
    records = [
        analyze_checkpoint(
            TrajectorySet(env=env, trajectories=tuple(trajs), meta={}), analysis
        )
        for (_, _), trajs in sorted(groups.items())
    ]
    summary = summarize_run(records)
    hp = analysis.hidden_progress
    flags = (
        detect_hidden_progress(summary, hp)
        if len(summary.checkpoints) >= hp.window
        else []
    )

    meta = _meta(cfg, digests)
    report_path = Path(f"{cfg['out_prefix']}.{cfg['report_format']}")
    report_path.write_bytes(
        emit_report(summary, records, cfg["report_format"], flags=flags, meta=meta)
    )
    outputs = [report_path]
    # Plots need two checkpoints with gate-passing aggregates; an
    # all-failing series still gets its report.
    plottable = sum(
        1 for a in summary.checkpoints if a.mean_median_reward is not None
    )
    if not cfg["no_plots"] and plottable >= 2:
        outputs.extend(emit_plots(summary, cfg["out_prefix"], flags=flags, meta=meta))
    print(f"wrote {', '.join(str(p) for p in outputs)}")
    gate_failures = sum(a.n_gate_failures for a in summary.checkpoints)
    if gate_failures:
        print(
            f"warning: {gate_failures} fits failed the reconstruction gate",
            file=sys.stderr,
        )
    if flags:
        for flag in flags:
            triggers = ", ".join(
                f"{t.metric} {'up' if t.direction > 0 else 'down'}"
                for t in flag.triggers
            )
            print(
                "hidden progress: checkpoints "
                f"{flag.checkpoints[0]}..{flag.checkpoints[-1]} ({triggers})"
            )
    else:
        print("no hidden-progress windows flagged")
    return 0


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (NumericalError, DegenerateDataError, np.linalg.LinAlgError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 4
    except (ValueError, KoopctlError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
