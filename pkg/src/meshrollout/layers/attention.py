"""Adjacency-masked multi-head attention."""

import math
from typing import Optional, Union

import torch
from torch import nn

from meshrollout.autodiff import ops

from .exceptions import HeadConfigError
from .mlp import check_width, he_uniform_
from .rope import RopeConfig, apply_rope

AttentionOutput = Union[torch.Tensor, tuple[torch.Tensor, torch.Tensor]]


class MaskedMultiHeadAttention(nn.Module):
    """Scaled dot-product attention restricted to admitted (query, key) pairs.

    Inputs have shape ``... x T x d`` with any leading batch axes and
    ``admitted`` is a boolean ``... x T x T`` support (``None`` admits every
    pair). Excluded pairs get exactly zero weight through an additive
    ``-inf`` mask. With ``hadamard=True`` the logits are instead multiplied
    by the 0/1 support and a plain softmax is taken over every key, which
    leaves non-neighbors with nonzero weight.
    """

    def __init__(self, width: int, heads: int, hadamard: bool = False):
        super().__init__()
        if width % heads != 0:
            raise HeadConfigError(width, heads)
        self.width = width
        self.heads = heads
        self.head_dim = width // heads
        self.hadamard = hadamard
        self.query = he_uniform_(nn.Linear(width, width, bias=False))
        self.key = he_uniform_(nn.Linear(width, width, bias=False))
        self.value = he_uniform_(nn.Linear(width, width, bias=False))
        self.output = he_uniform_(nn.Linear(width, width, bias=False))

    def split_heads(self, x: torch.Tensor) -> torch.Tensor:
        """``... x T x d`` to ``... x H x T x d_h``."""
        *lead, tokens, _ = x.shape
        return x.reshape(*lead, tokens, self.heads, self.head_dim).transpose(-3, -2)

    def merge_heads(self, x: torch.Tensor) -> torch.Tensor:
        *lead, _, tokens, _ = x.shape
        return x.transpose(-3, -2).reshape(*lead, tokens, self.width)

    def forward(
        self,
        z: torch.Tensor,
        context: Optional[torch.Tensor] = None,
        admitted: Optional[torch.Tensor] = None,
        positions: Optional[torch.Tensor] = None,
        rope: Optional[RopeConfig] = None,
        bias: Optional[torch.Tensor] = None,
        allow_empty_rows: bool = False,
        return_weights: bool = False,
    ) -> AttentionOutput:
        """Attend from ``z`` to ``context`` (``z`` itself when omitted).

        ``bias`` is added to the logits before masking (``H x T x T`` or the
        full logit shape). ``allow_empty_rows`` gives fully masked queries
        all-zero weights instead of raising.
        """
        context = z if context is None else context
        check_width("masked_mha", z, self.width)
        check_width("masked_mha", context, self.width)

        q = self.split_heads(self.query(z))
        k = self.split_heads(self.key(context))
        v = self.split_heads(self.value(context))
        if rope is not None:
            if positions is None:
                raise ValueError("RoPE needs centered positions")
            q = apply_rope(q, positions, rope)
            k = apply_rope(k, positions, rope)

        logits = ops.div(ops.matmul(q, ops.transpose(k)), math.sqrt(self.head_dim))
        if bias is not None:
            logits = ops.add(logits, bias)

        if admitted is None:
            weights = ops.softmax(logits, axis=-1)
        else:
            support = admitted.unsqueeze(-3).expand(logits.shape)
            if self.hadamard:
                weights = ops.softmax(ops.mul(logits, support.to(logits.dtype)), axis=-1)
            elif allow_empty_rows:
                weights = ops.padded_softmax(logits, support)
            else:
                weights = ops.masked_softmax(logits, support)

        out = self.output(self.merge_heads(ops.matmul(weights, v)))
        if return_weights:
            return out, weights
        return out
