"""One-layer transformer over star sequences."""

from dataclasses import dataclass

import torch
from torch import nn

from meshrollout.autodiff import ops
from meshrollout.layers import GatedMLP, MaskedMultiHeadAttention, RMSNorm

from .stars import StarBatch


@dataclass(eq=False)
class MnpOutput:
    """Transformed tokens, shaped like the input star batch."""

    tokens: torch.Tensor


class RingTransformer(nn.Module):
    """Pre-norm attention and gated feed-forward layer inside each star.

    ``h = S + MHA(norm(S))`` and ``O = h + GatedMLP(norm(h))``. Padded tokens
    neither attend nor are attended and leave as zero vectors.
    """

    def __init__(self, width: int, heads: int, exclude_center_as_key: bool = False):
        super().__init__()
        self.exclude_center_as_key = exclude_center_as_key
        self.attention_norm = RMSNorm(width)
        self.attention = MaskedMultiHeadAttention(width, heads)
        self.mlp_norm = RMSNorm(width)
        self.mlp = GatedMLP(width)

    def forward(self, batch: StarBatch) -> MnpOutput:
        tokens = batch.sequences
        admitted = batch.attention_mask(self.exclude_center_as_key)
        attended = self.attention(
            self.attention_norm(tokens), admitted=admitted, allow_empty_rows=True
        )
        hidden = ops.add(tokens, attended)
        out = ops.add(hidden, self.mlp(self.mlp_norm(hidden)))
        padding = batch.pad_mask.unsqueeze(-1).expand(out.shape)
        return MnpOutput(tokens=ops.masked_fill(out, padding, 0.0))
