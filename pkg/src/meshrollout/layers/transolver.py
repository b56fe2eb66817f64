"""Transolver slice attention."""

from typing import Optional

import torch
from torch import nn

from meshrollout.autodiff import ops

from .attention import MaskedMultiHeadAttention
from .mlp import MLP, check_width


class TransolverBlock(nn.Module):
    """Pool nodes into ``M`` soft slices, attend across slices, broadcast back.

    ``w = softmax(MLP(x))`` over slices, ``z_j = sum_i w_ij x_i / sum_i w_ij``
    and ``x'_i = sum_j w_ij Attn(z)_j``.
    """

    def __init__(self, width: int, heads: int, num_slices: int):
        super().__init__()
        if num_slices < 1:
            raise ValueError(f"num_slices must be >= 1, got {num_slices}")
        self.width = width
        self.num_slices = num_slices
        self.slice_mlp = MLP(width, width, num_slices)
        self.attention = MaskedMultiHeadAttention(width, heads)

    def slice_weights(self, x: torch.Tensor) -> torch.Tensor:
        return ops.softmax(self.slice_mlp(x), axis=-1)

    def forward(
        self, x: torch.Tensor, weights: Optional[torch.Tensor] = None
    ) -> torch.Tensor:
        check_width("transolver_block", x, self.width)
        weights = self.slice_weights(x) if weights is None else weights
        totals = ops.reduce_sum(weights, axis=0)
        pooled = ops.matmul(ops.transpose(weights), x)
        slices = ops.div(pooled, totals.unsqueeze(-1).expand_as(pooled))
        attended = self.attention(slices)
        return ops.matmul(weights, attended)
