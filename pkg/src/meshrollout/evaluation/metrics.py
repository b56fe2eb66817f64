"""One-step and all-rollout RMSE with a fixed averaging order."""

from collections.abc import Sequence

import numpy as np
import torch

from meshrollout.data import Trajectory, build_node_features
from meshrollout.surrogate import MeshSurrogate, PreparedGraph

from .boundary import enforce_bc
from .rollout import RolloutResult


def mean_squared_error(predicted: np.ndarray, truth: np.ndarray) -> float:
    """Mean over nodes and components of one state."""
    return float(np.mean((np.asarray(predicted, dtype=np.float64) - truth) ** 2))


def _rmse_of_means(per_trajectory: Sequence[Sequence[float]]) -> float:
    """``sqrt(mean_traj mean_t mse)``; mse already averages components and nodes."""
    if not per_trajectory or any(len(series) == 0 for series in per_trajectory):
        raise ValueError("need at least one step per trajectory")
    return float(np.sqrt(np.mean([np.mean(series) for series in per_trajectory])))


def rmse_1step(
    model: MeshSurrogate,
    trajectories: Sequence[Trajectory],
    graphs: Sequence[PreparedGraph],
    dtype: torch.dtype = torch.float32,
) -> float:
    """Next-step error from ground-truth inputs, boundary-enforced like a rollout."""
    config = model.config
    per_trajectory = []
    for traj, graph in zip(trajectories, graphs):
        first = 1 if config.include_history else 0
        series = []
        for t in range(first, traj.num_steps - 1):
            features = build_node_features(
                traj, t, config.include_history, config.include_positions
            )
            inputs = torch.as_tensor(features.values, dtype=dtype)
            state = torch.as_tensor(traj.states[t], dtype=dtype)
            predicted = model.predict(inputs, state, graph).double().numpy()
            truth = traj.states[t + 1].astype(np.float64)
            predicted = enforce_bc(predicted, truth, traj.mesh.node_type, traj.schema)
            series.append(mean_squared_error(predicted, truth))
        per_trajectory.append(series)
    return _rmse_of_means(per_trajectory)


def rmse_rollout(result: RolloutResult) -> float:
    """All-rollout RMSE of one trajectory; ``inf`` when the rollout diverged."""
    if result.diverged:
        return float("inf")
    return _rmse_of_means([result.step_mse])


def rmse_rollouts(results: Sequence[RolloutResult]) -> float:
    """All-rollout RMSE averaged over trajectories before the root."""
    if any(r.diverged for r in results):
        return float("inf")
    return _rmse_of_means([r.step_mse for r in results])


def aggregate_seeds(values: Sequence[float]) -> tuple[float, float]:
    """Mean and population standard deviation across seeds."""
    array = np.asarray(values, dtype=np.float64)
    if array.size == 0:
        raise ValueError("no values to aggregate")
    return float(array.mean()), float(array.std(ddof=0))
