"""Input-noise calibration from the one-step error of a noise-free model."""

from collections.abc import Sequence

import numpy as np
import structlog
import torch

from meshrollout.data import Trajectory, build_node_features
from meshrollout.surrogate import MeshSurrogate, PreparedGraph

logger = structlog.get_logger(__name__)


def estimate_noise_scale(
    model: MeshSurrogate,
    trajectories: Sequence[Trajectory],
    graphs: Sequence[PreparedGraph],
    dtype: torch.dtype = torch.float32,
) -> dict[str, float]:
    """Per-component noise sigma: the largest one-step error std over time.

    The standard deviation is taken over nodes at each step; the maximum runs
    over steps and trajectories. The model should be trained without noise.
    """
    config = model.config
    first = 1 if config.include_history else 0
    schema = trajectories[0].schema
    worst = np.zeros(schema.num_components)
    for traj, graph in zip(trajectories, graphs):
        for t in range(first, traj.num_steps - 1):
            features = build_node_features(
                traj, t, config.include_history, config.include_positions
            )
            inputs = torch.as_tensor(features.values, dtype=dtype)
            state = torch.as_tensor(traj.states[t], dtype=dtype)
            predicted = model.predict(inputs, state, graph).double().numpy()
            error = predicted - traj.states[t + 1]
            worst = np.maximum(worst, error.std(axis=0))
    scale = {name: float(s) for name, s in zip(schema.names, worst)}
    logger.info("Estimated noise scale", **scale)
    return scale
