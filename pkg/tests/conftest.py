"""Shared pytest configuration and fixtures."""

import numpy as np
import pytest
import torch

from meshrollout.data import SimulationParams, generate_mesh, simulate
from meshrollout.mesh import MeshGraph, NodeType
from meshrollout.surrogate import ModelConfig


@pytest.fixture(autouse=True)
def _seed_torch():
    """Start every test from the same global torch state."""
    torch.manual_seed(0)
    yield


@pytest.fixture
def triangle_mesh():
    """Three mutually connected Normal nodes."""
    positions = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    return MeshGraph.from_undirected(
        positions, [(0, 1), (1, 2), (2, 0)], np.full(3, NodeType.NORMAL)
    )


@pytest.fixture
def path_mesh():
    """Path graph 0-1-2 on a line."""
    positions = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
    return MeshGraph.from_undirected(
        positions, [(0, 1), (1, 2)], np.full(3, NodeType.NORMAL)
    )


@pytest.fixture(scope="session")
def small_mesh():
    """Random 60-node triangulation of the unit square."""
    return generate_mesh(60, seed=3)


@pytest.fixture(scope="session")
def small_trajectory(small_mesh):
    """Six stored states of the default advection-diffusion problem."""
    return simulate(small_mesh, steps=5, delta_t=0.002, params=SimulationParams(), seed=1)


@pytest.fixture(scope="session")
def small_trajectories():
    """Two short trajectories on distinct meshes."""
    return [
        simulate(generate_mesh(50, seed=k), steps=4, delta_t=0.002, seed=10 + k)
        for k in range(2)
    ]


@pytest.fixture
def tiny_model_config():
    """Two-block transformer small enough for per-test training."""
    return ModelConfig(architecture="transformer", depth=2, width=16, heads=2)
