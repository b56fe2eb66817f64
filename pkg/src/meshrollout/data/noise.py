"""Gaussian input noise for next-step training."""

from typing import Union

import numpy as np

from .models import NodeFeatures, NoiseSpec

SeedLike = Union[int, np.random.SeedSequence, np.random.Generator]


def _generator(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def add_training_noise(
    features: NodeFeatures, spec: NoiseSpec, seed: SeedLike
) -> NodeFeatures:
    """Return a copy of ``features`` with N(0, sigma) added to dynamical columns.

    Columns are visited in order and one normal vector is drawn per column
    with a positive sigma, so the result is reproducible from ``seed``.
    """
    spec.validate()
    rng = _generator(seed)
    values = features.values.copy()
    for k, sigma in enumerate(noise_vector(features, spec)):
        if sigma == 0.0:
            continue
        values[:, k] += rng.normal(0.0, sigma, size=features.num_nodes)
    return NodeFeatures(values, features.columns)


def noise_vector(features: NodeFeatures, spec: NoiseSpec) -> np.ndarray:
    """Per-column sigma aligned with ``features.columns`` (0 for non-dynamical)."""
    return np.array(
        [
            spec.sigma_for(c.component) if c.dynamical else 0.0
            for c in features.columns
        ]
    )
