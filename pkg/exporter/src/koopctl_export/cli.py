"""Command-line entry point for the rollout exporter."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .export import ExportJob, export_rollouts


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="koopctl-export",
        description="Roll out saved discrete-action policies and write "
        "koopctl trajectory files.",
    )
    parser.add_argument("--version", action="version", version="koopctl-export 0.1.0")
    sub = parser.add_subparsers(dest="command", required=True)
    ex = sub.add_parser(
        "export", help="roll out policies and write one trajectory file"
    )
    ex.add_argument("--env", required=True, help="environment id, e.g. CartPole-v1")
    ex.add_argument(
        "--model",
        action="append",
        help="saved policy for one checkpoint (built-in JSON or SB3 .zip); "
        "repeatable, pairs with --checkpoint; omit for the random fallback",
    )
    ex.add_argument(
        "--checkpoint",
        action="append",
        type=int,
        help="checkpoint tag (repeatable; default 0)",
    )
    ex.add_argument("--trials", type=int, default=100, help="trials per (checkpoint, seed)")
    ex.add_argument("--max-steps", type=int, default=200, help="step cap per trial")
    ex.add_argument(
        "--seed", action="append", type=int, help="seed tag (repeatable; default 0)"
    )
    ex.add_argument(
        "--deterministic",
        action="store_true",
        help="argmax actions instead of sampling",
    )
    ex.add_argument("--out", required=True, help="output trajectory file")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        tags = args.checkpoint if args.checkpoint is not None else [0]
        if args.model is None:
            sources = [None] * len(tags)
        elif len(args.model) == len(tags):
            sources = args.model
        else:
            raise ValueError(
                f"got {len(args.model)} --model for {len(tags)} --checkpoint; "
                f"counts must match (or omit --model for the random fallback)"
            )
        job = ExportJob(
            env_id=args.env,
            checkpoints=tuple(zip(tags, sources)),
            trials=args.trials,
            max_steps=args.max_steps,
            seeds=tuple(args.seed) if args.seed is not None else (0,),
            deterministic=args.deterministic,
            out_path=Path(args.out),
        )
        export_rollouts(job)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    n = job.trials * len(job.checkpoints) * len(job.seeds)
    print(f"wrote {n} trials to {job.out_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
