"""Autoregressive rollouts, RMSE metrics and latent probes.

Usage:
    from meshrollout.evaluation import ModelStepper, rollout, rmse_rollout

    result = rollout(ModelStepper(model, graph, traj), traj)
    error = rmse_rollout(result)
"""

from .boundary import enforce_bc, enforced_entries
from .export import export_latents, principal_coordinates
from .metrics import (
    aggregate_seeds,
    mean_squared_error,
    rmse_1step,
    rmse_rollout,
    rmse_rollouts,
)
from .probes import (
    ProbeConfig,
    ProbeReport,
    collect_latents,
    latent_distance_probe,
    probe_targets,
    subtask_probe,
)
from .rollout import (
    DIVERGENCE_FACTOR,
    ModelStepper,
    OracleStepper,
    PersistenceStepper,
    RolloutResult,
    Stepper,
    continue_rollout,
    rollout,
)

__all__ = [
    # Models
    "RolloutResult",
    "ProbeConfig",
    "ProbeReport",
    "DIVERGENCE_FACTOR",
    # Steppers
    "Stepper",
    "ModelStepper",
    "OracleStepper",
    "PersistenceStepper",
    # Operations
    "enforce_bc",
    "enforced_entries",
    "rollout",
    "continue_rollout",
    "mean_squared_error",
    "rmse_1step",
    "rmse_rollout",
    "rmse_rollouts",
    "aggregate_seeds",
    "collect_latents",
    "latent_distance_probe",
    "probe_targets",
    "subtask_probe",
    "export_latents",
    "principal_coordinates",
]
