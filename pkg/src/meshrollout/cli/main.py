"""Argument parsing and exit codes of the ``meshrollout`` command."""

import argparse
from collections.abc import Sequence
from pathlib import Path
from typing import Optional

import structlog
from pydantic import ValidationError

from meshrollout.autodiff import configure_runtime
from meshrollout.config import get_settings
from meshrollout.exceptions import MeshRolloutError
from meshrollout.telemetry import configure_logging, configure_tracing

from .ablation import AXES
from .commands import cmd_ablate, cmd_eval, cmd_generate, cmd_train, cmd_verify
from .config import ExperimentConfig, load_experiment
from .exceptions import ConfigError

logger = structlog.get_logger(__name__)

EXIT_OK = 0
EXIT_RUN_ERROR = 1
EXIT_CONFIG_ERROR = 2


def _seeds(text: str) -> list[int]:
    """``"0,1,2"`` or a count ``"5"`` meaning seeds 0..4."""
    try:
        if "," in text:
            return [int(part) for part in text.split(",") if part.strip()]
        return list(range(int(text)))
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"invalid seeds '{text}'") from e


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="meshrollout",
        description="Train and evaluate mesh-based surrogates on synthetic flows.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="Experiment JSON file")
    common.add_argument(
        "--out", "--out-dir", dest="out", type=Path, help="Output directory"
    )
    common.add_argument(
        "--seeds", type=_seeds, help="Comma-separated seeds, or a count (5 = 0..4)"
    )
    common.add_argument("--threads", type=int, help="Worker threads")

    commands = parser.add_subparsers(dest="command", required=True)

    generate = commands.add_parser(
        "generate", parents=[common], help="Write the synthetic dataset"
    )
    generate.add_argument(
        "--nodes", "--num-nodes", dest="num_nodes", type=int, help="Nodes per mesh"
    )
    generate.add_argument("--steps", type=int, help="Time steps per trajectory")
    generate.add_argument("--dt", dest="delta_t", type=float, help="Time step (s)")
    generate.add_argument(
        "--trajectories",
        "--num-train",
        dest="num_train",
        type=int,
        help="Training trajectories",
    )
    generate.add_argument("--num-test", type=int, help="Test trajectories")
    generate.add_argument(
        "--seed",
        "--data-seed",
        dest="data_seed",
        type=int,
        help="Root seed of the split",
    )

    train = commands.add_parser("train", parents=[common], help="Train every seed")
    train.add_argument(
        "--resume", action="store_true", help="Continue from the latest checkpoint"
    )

    evaluate = commands.add_parser("eval", parents=[common], help="Report RMSE")
    reference = evaluate.add_mutually_exclusive_group()
    reference.add_argument(
        "--oracle", action="store_true", help="Evaluate the ground-truth stepper"
    )
    reference.add_argument(
        "--persistence", action="store_true", help="Evaluate u_{t+1} = u_t"
    )

    ablate = commands.add_parser("ablate", parents=[common], help="Run a sweep")
    ablate.add_argument("--axis", required=True, choices=sorted(AXES))

    commands.add_parser("verify", parents=[common], help="Numerical theory checks")
    return parser


def _apply_overrides(config: ExperimentConfig, args: argparse.Namespace):
    if args.seeds:
        config = config.with_seeds(args.seeds)
    if args.command == "generate":
        changes = {
            "num_nodes": args.num_nodes,
            "steps": args.steps,
            "delta_t": args.delta_t,
            "num_train": args.num_train,
            "num_test": args.num_test,
            "seed": args.data_seed,
        }
        changes = {k: v for k, v in changes.items() if v is not None}
        if changes:
            dataset = type(config.dataset).model_validate(
                {**config.dataset.model_dump(), **changes}
            )
            config = config.model_copy(update={"dataset": dataset})
    return config


def run(args: argparse.Namespace) -> int:
    settings = get_settings()
    threads = args.threads or settings.threads
    configure_runtime(threads, settings.deterministic)
    out = args.out or settings.output_dir

    if args.command == "verify":
        report = cmd_verify(out)
        return EXIT_OK if report["passed"] else EXIT_RUN_ERROR

    config = _apply_overrides(load_experiment(args.config), args)
    out = args.out or config.output_dir
    if args.command == "generate":
        cmd_generate(config, out, threads)
    elif args.command == "train":
        cmd_train(config, out, threads, resume=args.resume)
    elif args.command == "eval":
        cmd_eval(config, out, oracle=args.oracle, persistence=args.persistence)
    elif args.command == "ablate":
        cmd_ablate(config, args.axis, out, threads)
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Entry point; returns 0, 1 for run failures or 2 for bad configuration."""
    args = build_parser().parse_args(argv)
    settings = get_settings()
    configure_tracing(settings)
    configure_logging(settings)
    try:
        return run(args)
    except (ConfigError, ValidationError) as e:
        logger.error("Invalid configuration", error=str(e))
        return EXIT_CONFIG_ERROR
    except MeshRolloutError as e:
        logger.error("Command failed", error=e.message, details=e.details)
        return EXIT_RUN_ERROR
