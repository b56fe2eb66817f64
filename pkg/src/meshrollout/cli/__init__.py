"""Command-line entry point: generate, train, eval, ablate and verify.

Usage:
    meshrollout generate --config exp.json --out runs/exp
    meshrollout train --config exp.json --out runs/exp --seeds 5
    meshrollout eval --config exp.json --out runs/exp
    meshrollout ablate --config exp.json --out runs/sweep --axis mnp_centers
    meshrollout verify --out runs/verify
"""

from .ablation import AXES, AblationCell, ablation_cells
from .commands import (
    cmd_ablate,
    cmd_eval,
    cmd_generate,
    cmd_train,
    cmd_verify,
    evaluate_model,
    evaluate_stepper,
)
from .config import EvalConfig, ExperimentConfig, load_experiment, parse_experiment
from .exceptions import (
    CliError,
    ConfigError,
    ConfigFileError,
    ConfigValidationError,
    MissingArtifactError,
)
from .main import EXIT_CONFIG_ERROR, EXIT_OK, EXIT_RUN_ERROR, build_parser, main

__all__ = [
    # Configuration
    "ExperimentConfig",
    "EvalConfig",
    "load_experiment",
    "parse_experiment",
    # Commands
    "cmd_generate",
    "cmd_train",
    "cmd_eval",
    "cmd_ablate",
    "cmd_verify",
    "evaluate_model",
    "evaluate_stepper",
    "AblationCell",
    "ablation_cells",
    "AXES",
    # Entry point
    "build_parser",
    "main",
    "EXIT_OK",
    "EXIT_RUN_ERROR",
    "EXIT_CONFIG_ERROR",
    # Exceptions
    "CliError",
    "ConfigError",
    "ConfigFileError",
    "ConfigValidationError",
    "MissingArtifactError",
]
