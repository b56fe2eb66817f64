"""Positional encoding modes and their learned or fixed addends."""

from enum import Enum
from typing import Optional

import numpy as np
import torch
from torch import nn

from meshrollout.mesh import MeshGraph, geometric_context

from .mlp import MLP


class PeMode(str, Enum):
    """How node positions enter the attention processors."""

    NONE = "none"
    ROPE = "rope"
    LEARNED_ABS = "learned_abs"
    LEARNED_RELBIAS = "learned_relbias"
    DISTANCE_WEIGHTED = "distance_weighted"


class LearnedAbsoluteEmbedding(nn.Module):
    """``N x d`` addend computed from centered coordinates; zero at init."""

    def __init__(self, dim: int, width: int):
        super().__init__()
        self.mlp = MLP(dim, width, width, zero_last=True)

    def forward(self, centered_positions: torch.Tensor) -> torch.Tensor:
        return self.mlp(centered_positions)


class LearnedRelativeBias(nn.Module):
    """Per-head logit bias ``MLP(p_j - p_i)`` evaluated on admitted pairs only."""

    def __init__(self, dim: int, heads: int, hidden: int = 16):
        super().__init__()
        self.heads = heads
        self.mlp = MLP(dim, hidden, heads)

    def forward(self, positions: torch.Tensor, admitted: torch.Tensor) -> torch.Tensor:
        """``H x N x N`` bias, zero outside ``admitted``."""
        num_nodes = positions.shape[0]
        receivers, senders = torch.nonzero(admitted, as_tuple=True)
        offsets = positions[senders] - positions[receivers]
        values = self.mlp(offsets)
        flat = receivers * num_nodes + senders
        bias = values.new_zeros(num_nodes * num_nodes, self.heads).index_add(0, flat, values)
        return bias.reshape(num_nodes, num_nodes, self.heads).permute(2, 0, 1)


def distance_weighted_adjacency(
    mesh: MeshGraph, h: Optional[float] = None, self_loops: bool = False
) -> np.ndarray:
    """Dense ``N x N`` weights ``exp(-|x_j - x_i| / h)`` on mesh edges.

    Non-edges are zero; with ``self_loops`` the diagonal is 1. ``h`` defaults
    to the mesh's maximum edge length.
    """
    if h is None:
        h = geometric_context(mesh).mesh_size_h
    if h <= 0:
        raise ValueError(f"h must be positive, got {h}")
    weights = np.zeros((mesh.num_nodes, mesh.num_nodes))
    offsets = mesh.positions[mesh.receivers] - mesh.positions[mesh.senders]
    weights[mesh.senders, mesh.receivers] = np.exp(-np.linalg.norm(offsets, axis=1) / h)
    if self_loops:
        np.fill_diagonal(weights, 1.0)
    return weights
