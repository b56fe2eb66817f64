"""Graph transformer block with adjacency-masked attention."""

from typing import Optional

import torch
from torch import nn

from meshrollout.autodiff import ops

from .attention import MaskedMultiHeadAttention
from .mlp import GatedMLP, RMSNorm
from .rope import RopeConfig


class TransformerBlock(nn.Module):
    """``Z' = RMSNorm(MHA(Z, A) + Z)``, ``Z_out = RMSNorm(GatedMLP(Z') + Z')``."""

    def __init__(
        self,
        width: int,
        heads: int,
        hadamard: bool = False,
        mlp_hidden: Optional[int] = None,
    ):
        super().__init__()
        self.attention = MaskedMultiHeadAttention(width, heads, hadamard=hadamard)
        self.attention_norm = RMSNorm(width)
        self.mlp = GatedMLP(width, mlp_hidden)
        self.mlp_norm = RMSNorm(width)

    def forward(
        self,
        z: torch.Tensor,
        admitted: Optional[torch.Tensor] = None,
        positions: Optional[torch.Tensor] = None,
        rope: Optional[RopeConfig] = None,
        bias: Optional[torch.Tensor] = None,
    ) -> torch.Tensor:
        attended = self.attention(
            z, admitted=admitted, positions=positions, rope=rope, bias=bias
        )
        hidden = self.attention_norm(ops.add(attended, z))
        return self.mlp_norm(ops.add(self.mlp(hidden), hidden))
