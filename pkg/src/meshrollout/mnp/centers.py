"""Sampling of star centers among internal nodes."""

from enum import Enum
from typing import Union

import numpy as np
from scipy.spatial import cKDTree

from meshrollout.mesh import MeshGraph, NodeType, internal_nodes

from .exceptions import CenterSamplingError

CENTER_STREAM = 1


class CenterBias(str, Enum):
    """Sampling law over internal nodes."""

    UNIFORM = "uniform"
    TOWARD_BOUNDARY = "toward_boundary"
    AWAY_FROM_BOUNDARY = "away_from_boundary"


def boundary_distance(mesh: MeshGraph, pool: np.ndarray) -> np.ndarray:
    """Distance from each node in ``pool`` to the nearest non-Normal node."""
    boundary = np.flatnonzero(mesh.node_type != NodeType.NORMAL)
    if boundary.size == 0:
        return np.ones(pool.shape[0])
    distances, _ = cKDTree(mesh.positions[boundary]).query(mesh.positions[pool])
    return np.asarray(distances, dtype=np.float64)


def _probabilities(mesh: MeshGraph, pool: np.ndarray, bias: CenterBias) -> np.ndarray:
    distance = boundary_distance(mesh, pool)
    if bias == CenterBias.TOWARD_BOUNDARY:
        weights = 1.0 / (distance + 1e-12)
    else:
        weights = distance + 1e-12
    return weights / weights.sum()


def sample_centers(
    mesh: MeshGraph,
    m: int,
    seed: Union[int, np.random.Generator],
    bias: Union[CenterBias, str] = CenterBias.UNIFORM,
) -> np.ndarray:
    """``m`` distinct internal nodes drawn without replacement, ascending."""
    pool = internal_nodes(mesh)
    if m < 0 or m > pool.shape[0]:
        raise CenterSamplingError(m, int(pool.shape[0]))
    if m == 0:
        return np.empty(0, dtype=np.int64)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    bias = CenterBias(bias)
    p = None if bias == CenterBias.UNIFORM else _probabilities(mesh, pool, bias)
    chosen = rng.choice(pool, size=m, replace=False, p=p)
    return np.sort(chosen).astype(np.int64)


class CenterSampler:
    """Fresh center set per training step from a per-step seed stream."""

    def __init__(
        self,
        mesh: MeshGraph,
        m: int,
        seed: int,
        bias: Union[CenterBias, str] = CenterBias.UNIFORM,
    ):
        self.mesh = mesh
        self.m = min(m, int(internal_nodes(mesh).shape[0]))
        self.seed = seed
        self.bias = CenterBias(bias)

    def sample(self, step: int) -> np.ndarray:
        stream = np.random.SeedSequence([self.seed, step, CENTER_STREAM])
        return sample_centers(self.mesh, self.m, np.random.default_rng(stream), self.bias)
