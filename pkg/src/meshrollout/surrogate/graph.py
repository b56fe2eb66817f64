"""Per-mesh tensors a surrogate needs before its first forward pass."""

from dataclasses import dataclass
from typing import Optional

import numpy as np
import structlog
import torch

from meshrollout.layers import (
    Architecture,
    GraphContext,
    PeMode,
    RopeConfig,
    build_rope_config,
    distance_weighted_adjacency,
)
from meshrollout.mesh import (
    JumperError,
    MeshGraph,
    add_jumpers,
    default_jumper_count,
    edge_features,
    geometric_context,
)
from meshrollout.mnp import neighbor_table

from .config import ModelConfig
from .exceptions import GraphPreparationError

logger = structlog.get_logger(__name__)


@dataclass(eq=False)
class PreparedGraph:
    """Immutable graph inputs shared by every step on one mesh.

    ``mesh`` is the simulation mesh (boundary labels, star neighborhoods,
    WLS stencils); ``processor_mesh`` is the graph the processor sees and
    carries the jumpers of the transformer. ``admitted`` always includes
    self-loops and is also the correctors' cross-attention support.
    """

    mesh: MeshGraph
    processor_mesh: MeshGraph
    centered_positions: torch.Tensor
    senders: torch.Tensor
    receivers: torch.Tensor
    admitted: torch.Tensor
    rope: Optional[RopeConfig] = None
    attention_bias: Optional[torch.Tensor] = None
    edge_inputs: Optional[torch.Tensor] = None
    star_table: Optional[np.ndarray] = None

    @property
    def num_nodes(self) -> int:
        return self.mesh.num_nodes

    def context(self) -> GraphContext:
        """Fresh per-forward context; edge latents start unset."""
        return GraphContext(
            centered_positions=self.centered_positions,
            senders=self.senders,
            receivers=self.receivers,
            admitted=self.admitted,
            rope=self.rope,
            attention_bias=self.attention_bias,
        )


def _distance_bias(mesh: MeshGraph, h: float, dtype: torch.dtype) -> torch.Tensor:
    """Logit addend ``log w_ij = -|x_j - x_i| / h`` on edges, zero elsewhere."""
    weights = distance_weighted_adjacency(mesh, h)
    bias = np.zeros_like(weights)
    edges = weights > 0
    bias[edges] = np.log(weights[edges])
    return torch.as_tensor(bias, dtype=dtype)


def prepare_graph(
    mesh: MeshGraph,
    config: ModelConfig,
    seed: int = 0,
    dtype: torch.dtype = torch.float32,
) -> PreparedGraph:
    """Precompute masks, centered positions, RoPE tables and edge tensors.

    Jumpers are drawn once per mesh from ``seed`` and only for the
    transformer processor.
    """
    geometry = geometric_context(mesh)
    processor_mesh = mesh
    if config.architecture == Architecture.TRANSFORMER:
        count = (
            default_jumper_count(mesh.num_nodes)
            if config.jumpers is None
            else config.jumpers
        )
        try:
            processor_mesh = add_jumpers(mesh, count, seed)
        except JumperError as e:
            raise GraphPreparationError(config.architecture.value, e.message) from e

    admitted = torch.as_tensor(processor_mesh.adjacency.to_dense(self_loops=True))
    rope = None
    if config.pe_mode == PeMode.ROPE:
        rope = build_rope_config(
            mesh.dim, config.head_dim, geometry.mesh_size_h, geometry.diameter
        )
    attention_bias = None
    if config.pe_mode == PeMode.DISTANCE_WEIGHTED:
        attention_bias = _distance_bias(processor_mesh, geometry.mesh_size_h, dtype)
    edge_inputs = None
    if config.architecture == Architecture.MGN:
        edge_inputs = torch.as_tensor(edge_features(mesh), dtype=dtype)
    star_table = neighbor_table(mesh, config.mnp.K) if config.mnp.enabled else None

    logger.debug(
        "Prepared graph",
        architecture=config.architecture.value,
        num_nodes=mesh.num_nodes,
        processor_edges=processor_mesh.num_edges,
        pe_mode=config.pe_mode.value,
    )
    return PreparedGraph(
        mesh=mesh,
        processor_mesh=processor_mesh,
        centered_positions=torch.as_tensor(geometry.centered_positions, dtype=dtype),
        senders=torch.as_tensor(processor_mesh.senders, dtype=torch.long),
        receivers=torch.as_tensor(processor_mesh.receivers, dtype=torch.long),
        admitted=admitted,
        rope=rope,
        attention_bias=attention_bias,
        edge_inputs=edge_inputs,
        star_table=star_table,
    )
