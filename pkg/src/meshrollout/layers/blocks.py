"""Spatial processor blocks behind a common residual interface.

Every processor family is wrapped as a :class:`SpatialBlock` whose
``delta`` is the increment ``phi(Z)`` of a residual update ``Z + phi(Z)``.
The temporal predictor-corrector and the plain processor stack both call
``delta``, so switching correction off leaves the plain computation intact.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Union

import torch
from torch import nn

from meshrollout.autodiff import ops

from .mgn import MgnBlock
from .mlp import MLP, RMSNorm
from .positional import LearnedRelativeBias, PeMode
from .rope import RopeConfig
from .transformer import TransformerBlock
from .transolver import TransolverBlock


class Architecture(str, Enum):
    """Spatial processor family."""

    MGN = "mgn"
    TRANSFORMER = "transformer"
    TRANSOLVER = "transolver"


@dataclass
class GraphContext:
    """Per-forward graph tensors shared by the blocks of one model.

    ``edge_latents`` is the only mutable field: MeshGraphNet blocks advance
    it as they run.
    """

    centered_positions: torch.Tensor
    senders: torch.Tensor
    receivers: torch.Tensor
    admitted: Optional[torch.Tensor] = None
    rope: Optional[RopeConfig] = None
    attention_bias: Optional[torch.Tensor] = None
    edge_latents: Optional[torch.Tensor] = field(default=None)

    @property
    def num_nodes(self) -> int:
        return int(self.centered_positions.shape[0])


class SpatialBlock(nn.Module, ABC):
    """Residual spatial update ``Z + delta(Z)``."""

    @abstractmethod
    def delta(self, z: torch.Tensor, ctx: GraphContext) -> torch.Tensor:
        """Increment added to ``z`` by this block."""

    def forward(self, z: torch.Tensor, ctx: GraphContext) -> torch.Tensor:
        return ops.add(z, self.delta(z, ctx))


class TransformerSpatialBlock(SpatialBlock):
    """Transformer layer on neighbor-masked node tokens."""

    def __init__(
        self,
        width: int,
        heads: int,
        pe_mode: Union[PeMode, str] = PeMode.NONE,
        dim: int = 2,
        hadamard: bool = False,
        mlp_hidden: Optional[int] = None,
    ):
        super().__init__()
        self.pe_mode = PeMode(pe_mode)
        self.layer = TransformerBlock(
            width, heads, hadamard=hadamard, mlp_hidden=mlp_hidden
        )
        self.relative_bias = (
            LearnedRelativeBias(dim, heads)
            if self.pe_mode == PeMode.LEARNED_RELBIAS
            else None
        )

    def delta(self, z: torch.Tensor, ctx: GraphContext) -> torch.Tensor:
        bias = None
        if self.relative_bias is not None:
            bias = self.relative_bias(ctx.centered_positions, ctx.admitted)
        elif self.pe_mode == PeMode.DISTANCE_WEIGHTED:
            bias = ctx.attention_bias
        rope = ctx.rope if self.pe_mode == PeMode.ROPE else None
        out = self.layer(
            z,
            admitted=ctx.admitted,
            positions=ctx.centered_positions,
            rope=rope,
            bias=bias,
        )
        return ops.sub(out, z)


class MgnSpatialBlock(SpatialBlock):
    """Message passing; advances ``ctx.edge_latents`` as a side effect."""

    def __init__(self, width: int, mlp_hidden: Optional[int] = None):
        super().__init__()
        self.layer = MgnBlock(width, mlp_hidden)

    def delta(self, z: torch.Tensor, ctx: GraphContext) -> torch.Tensor:
        if ctx.edge_latents is None:
            raise ValueError("MeshGraphNet blocks need encoded edge latents")
        node_update, edge_update = self.layer(
            z, ctx.edge_latents, ctx.senders, ctx.receivers
        )
        ctx.edge_latents = ops.add(ctx.edge_latents, edge_update)
        return node_update


class TransolverSpatialBlock(SpatialBlock):
    """Pre-norm slice attention followed by a pre-norm feed-forward layer."""

    def __init__(
        self, width: int, heads: int, num_slices: int, mlp_hidden: Optional[int] = None
    ):
        super().__init__()
        self.slice_norm = RMSNorm(width)
        self.layer = TransolverBlock(width, heads, num_slices)
        self.mlp_norm = RMSNorm(width)
        self.mlp = MLP(width, mlp_hidden or 2 * width, width)

    def delta(self, z: torch.Tensor, ctx: GraphContext) -> torch.Tensor:
        attended = self.layer(self.slice_norm(z))
        hidden = ops.add(z, attended)
        return ops.add(attended, self.mlp(self.mlp_norm(hidden)))


def build_spatial_block(
    architecture: Union[Architecture, str],
    width: int,
    heads: int,
    num_slices: int = 8,
    pe_mode: Union[PeMode, str] = PeMode.NONE,
    dim: int = 2,
    hadamard: bool = False,
    mlp_hidden: Optional[int] = None,
) -> SpatialBlock:
    """One processor layer; ``mlp_hidden`` overrides the feed-forward hidden width."""
    architecture = Architecture(architecture)
    if architecture == Architecture.TRANSFORMER:
        return TransformerSpatialBlock(width, heads, pe_mode, dim, hadamard, mlp_hidden)
    if architecture == Architecture.MGN:
        return MgnSpatialBlock(width, mlp_hidden)
    return TransolverSpatialBlock(width, heads, num_slices, mlp_hidden)
