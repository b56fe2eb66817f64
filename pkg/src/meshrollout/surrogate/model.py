"""Encode-process-decode surrogate with optional correctors and multi-node head."""

from dataclasses import dataclass, field

import numpy as np
import torch
from torch import nn

from meshrollout.autodiff import ops
from meshrollout.layers import (
    Architecture,
    LearnedAbsoluteEmbedding,
    PeMode,
    build_decoder,
    build_encoder,
    build_spatial_block,
    count_parameters,
)
from meshrollout.mnp import MnpHead
from meshrollout.temporal import TemporalCorrector, predictor

from .config import ModelConfig
from .graph import PreparedGraph


@dataclass
class SurrogateOutput:
    """Decoded increment and the latents it came from.

    ``latents[0]`` is the encoder output and ``latents[l]`` the output of
    block ``l``; only the first and last are kept unless all were requested.
    ``intermediate`` holds decoded increments after every corrector when
    intermediate supervision is on.
    """

    increment: torch.Tensor
    first: torch.Tensor
    last: torch.Tensor
    latents: list[torch.Tensor] = field(default_factory=list)
    intermediate: list[torch.Tensor] = field(default_factory=list)


class MeshSurrogate(nn.Module):
    """Predicts per-node increments; the next state is ``u_t + D(Z^L)``.

    Backbone modules (encoder, processor blocks, decoder) are created before
    any optional module, so two configurations that differ only in
    correctors, positional embedding or the multi-node head start from the
    same backbone weights under the same torch seed.
    """

    def __init__(
        self, config: ModelConfig, in_features: int, out_features: int, dim: int = 2
    ):
        super().__init__()
        self.config = config
        self.in_features = in_features
        self.out_features = out_features
        self.dim = dim
        width = config.width

        self.encoder = build_encoder(in_features, width)
        self.edge_encoder = (
            build_encoder(dim + 1, width)
            if config.architecture == Architecture.MGN
            else None
        )
        self.blocks = nn.ModuleList(
            build_spatial_block(
                config.architecture,
                width,
                config.heads,
                num_slices=config.num_slices,
                pe_mode=config.pe_mode,
                dim=dim,
                hadamard=config.hadamard,
                mlp_hidden=config.mlp_hidden,
            )
            for _ in range(config.depth)
        )
        self.decoder = build_decoder(width, out_features)

        temporal = config.temporal
        self.correctors = nn.ModuleDict(
            {
                str(layer): TemporalCorrector(
                    width,
                    config.heads,
                    gate_mode=temporal.gate_mode,
                    use_attention=temporal.use_attention,
                    use_gate=temporal.use_gate,
                    use_mixer=temporal.use_mixer,
                )
                for layer in config.corrected_layers()
            }
        )
        self.position_embedding = (
            LearnedAbsoluteEmbedding(dim, width)
            if config.pe_mode == PeMode.LEARNED_ABS
            else None
        )
        self.mnp_head = (
            MnpHead(
                width,
                config.heads,
                cap=config.mnp.K,
                exclude_center_as_key=config.mnp.exclude_center_as_key,
            )
            if config.mnp.enabled
            else None
        )

    @property
    def num_parameters(self) -> int:
        return count_parameters(self)

    def backbone_parameters(self) -> int:
        """Parameters excluding the multi-node head (unused at inference)."""
        head = count_parameters(self.mnp_head) if self.mnp_head is not None else 0
        return self.num_parameters - head

    def encode(self, features: torch.Tensor, graph: PreparedGraph) -> torch.Tensor:
        z = self.encoder(features)
        if self.position_embedding is not None:
            positions = graph.centered_positions.to(z.dtype)
            z = ops.add(z, self.position_embedding(positions))
        return z

    def forward(
        self,
        features: torch.Tensor,
        graph: PreparedGraph,
        keep_latents: bool = False,
    ) -> SurrogateOutput:
        """Run the processor on encoded ``features`` (``N x p``)."""
        ctx = graph.context()
        if self.edge_encoder is not None:
            ctx.edge_latents = self.edge_encoder(graph.edge_inputs.to(features.dtype))

        z = first = self.encode(features, graph)
        latents = [z] if keep_latents else []
        intermediate = []
        supervise = self.config.temporal.intermediate_supervision
        for layer, block in enumerate(self.blocks):
            key = str(layer)
            corrector = self.correctors[key] if key in self.correctors else None
            if corrector is None:
                z = block(z, ctx)
            else:
                z = corrector(predictor(z, block, ctx), z, ctx.admitted)
                if supervise and layer < len(self.blocks) - 1:
                    intermediate.append(self.decoder(z))
            if keep_latents:
                latents.append(z)
        return SurrogateOutput(
            increment=self.decoder(z),
            first=first,
            last=z,
            latents=latents,
            intermediate=intermediate,
        )

    def mnp_loss(
        self,
        output: SurrogateOutput,
        graph: PreparedGraph,
        centers: np.ndarray,
        targets: torch.Tensor,
    ) -> torch.Tensor:
        """Multi-node loss on ``centers``; zero when the head is absent."""
        if self.mnp_head is None or centers.shape[0] == 0:
            return output.increment.new_zeros(())
        return self.mnp_head(
            output.last,
            output.first,
            graph.mesh,
            centers,
            self.decoder,
            targets,
            table=graph.star_table,
        )

    @torch.no_grad()
    def predict(
        self, features: torch.Tensor, state: torch.Tensor, graph: PreparedGraph
    ) -> torch.Tensor:
        """Next state ``u_t + D(Z^L)`` without building a graph for gradients."""
        return ops.add(state, self.forward(features, graph).increment)
