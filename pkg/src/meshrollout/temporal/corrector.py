"""Predictor-corrector update of a spatial block.

The predictor is the block's residual update ``Z~ = Z + phi(Z)``. The
corrector reads ``C = [Z~, Z]`` and returns ``Z + G(C) * CA(C) + M(C)``
where ``CA`` is neighbor-masked cross-attention with queries from ``Z~``
and keys and values from ``Z``, ``G`` a gate in ``[0, 1]`` and ``M`` a
mixing perceptron.
"""

from enum import Enum
from typing import Optional, Union

import torch
from torch import nn

from meshrollout.autodiff import ops
from meshrollout.layers import (
    MLP,
    Activation,
    GraphContext,
    MaskedMultiHeadAttention,
    SpatialBlock,
)


class GateMode(str, Enum):
    """Final activation of the gate perceptron."""

    SIGMOID = "sigmoid"
    NODE_SOFTMAX = "node_softmax"


class CorrectionFrequency(str, Enum):
    """Which spatial blocks receive a corrector."""

    EVERY_LAYER = "every_layer"
    LAST_LAYER = "last_layer"


def predictor(z: torch.Tensor, block: SpatialBlock, ctx: GraphContext) -> torch.Tensor:
    """``Z~ = Z + phi_s(Z)``."""
    return ops.add(z, block.delta(z, ctx))


class TemporalCorrector(nn.Module):
    """Gated cross-attention corrector with an additive mixing branch.

    ``use_attention``, ``use_gate`` and ``use_mixer`` switch the branches
    off independently: without the gate ``G = 1``, without attention or the
    mixer their term is zero. ``GateMode.NODE_SOFTMAX`` normalizes the gate
    over the node axis instead of applying a per-entry sigmoid.
    """

    def __init__(
        self,
        width: int,
        heads: int,
        gate_mode: Union[GateMode, str] = GateMode.SIGMOID,
        use_attention: bool = True,
        use_gate: bool = True,
        use_mixer: bool = True,
        mixer_activation: Union[Activation, str] = Activation.SILU,
    ):
        super().__init__()
        self.width = width
        self.gate_mode = GateMode(gate_mode)
        self.use_attention = use_attention
        self.use_gate = use_gate
        self.use_mixer = use_mixer
        self.cross_attention = MaskedMultiHeadAttention(width, heads)
        self.gate = MLP(2 * width, width, width)
        self.mixer = MLP(2 * width, width, width, activation=mixer_activation)

    def gate_values(self, combined: torch.Tensor) -> torch.Tensor:
        logits = self.gate(combined)
        if self.gate_mode == GateMode.NODE_SOFTMAX:
            return ops.softmax(logits, axis=0)
        return torch.sigmoid(logits)

    def forward(
        self,
        z_tilde: torch.Tensor,
        z: torch.Tensor,
        admitted: Optional[torch.Tensor] = None,
    ) -> torch.Tensor:
        combined = ops.concat([z_tilde, z], axis=-1)
        out = z
        if self.use_attention:
            attended = self.cross_attention(z_tilde, context=z, admitted=admitted)
            if self.use_gate:
                attended = ops.mul(self.gate_values(combined), attended)
            out = ops.add(out, attended)
        if self.use_mixer:
            out = ops.add(out, self.mixer(combined))
        return out


class CorrectedBlock(nn.Module):
    """A spatial block followed by its corrector."""

    def __init__(self, block: SpatialBlock, corrector: TemporalCorrector):
        super().__init__()
        self.block = block
        self.corrector = corrector

    def forward(self, z: torch.Tensor, ctx: GraphContext) -> torch.Tensor:
        z_tilde = predictor(z, self.block, ctx)
        return self.corrector(z_tilde, z, ctx.admitted)
