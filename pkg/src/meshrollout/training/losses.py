"""Main next-step loss and the optional auxiliary terms."""

from typing import Optional

import numpy as np
import torch

from meshrollout.autodiff import ops
from meshrollout.theory import WlsOperator


def main_loss(
    predicted: torch.Tensor,
    target: torch.Tensor,
    mask: Optional[torch.Tensor] = None,
) -> torch.Tensor:
    """Mean squared error over nodes and components.

    ``mask`` (``N x c`` bool) restricts the mean to the admitted entries.
    """
    error = ops.sub(predicted, target)
    squared = ops.mul(error, error)
    if mask is None:
        return ops.reduce_mean(squared)
    weights = mask.to(squared.dtype)
    count = torch.clamp(ops.reduce_sum(weights), min=1.0)
    return ops.div(ops.reduce_sum(ops.mul(squared, weights)), count)


def _valid_rows(operator: WlsOperator, like: torch.Tensor) -> torch.Tensor:
    return torch.as_tensor(operator.valid_nodes, device=like.device)


def grad_supervision(
    predicted: torch.Tensor, target: torch.Tensor, operator: WlsOperator
) -> torch.Tensor:
    """Mean over non-degenerate nodes of ``|grad_h pred - grad_h target|^2``."""
    difference = operator.gradient_torch(ops.sub(predicted, target))
    valid = _valid_rows(operator, difference)
    squared = ops.reduce_sum(ops.mul(difference, difference), axis=(-2, -1))
    return ops.reduce_mean(squared[valid])


def divergence_residual(velocity: torch.Tensor, operator: WlsOperator) -> torch.Tensor:
    """Mean squared WLS divergence of an ``N x dim`` velocity field."""
    divergence = operator.divergence_torch(velocity)
    valid = _valid_rows(operator, divergence)
    return ops.reduce_mean(ops.mul(divergence, divergence)[valid])


def cosine_similarity_loss(
    predicted: torch.Tensor, target: torch.Tensor, eps: float = 1e-12
) -> torch.Tensor:
    """``1 - mean_i cos(pred_i, target_i)`` over per-node component vectors."""
    dot = ops.reduce_sum(ops.mul(predicted, target), axis=-1)
    pred_norm = torch.sqrt(ops.reduce_sum(ops.mul(predicted, predicted), axis=-1))
    target_norm = torch.sqrt(ops.reduce_sum(ops.mul(target, target), axis=-1))
    norms = ops.mul(pred_norm, target_norm)
    cosine = ops.div(dot, torch.clamp(norms, min=eps))
    return ops.sub(1.0, ops.reduce_mean(cosine))


def enforced_mask(enforced: np.ndarray, like: torch.Tensor) -> torch.Tensor:
    """Loss mask that drops boundary-enforced ``(node, component)`` entries."""
    return torch.as_tensor(~enforced, device=like.device)
