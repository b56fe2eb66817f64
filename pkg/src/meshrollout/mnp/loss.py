"""Multi-node prediction objective."""

from collections.abc import Callable

import torch

from meshrollout.autodiff import ops

from .ring import MnpOutput
from .stars import StarBatch

DEFAULT_ALPHA = 0.2


def mnp_loss(
    output: MnpOutput,
    decoder: Callable[[torch.Tensor], torch.Tensor],
    targets: torch.Tensor,
    batch: StarBatch,
) -> torch.Tensor:
    """Mean over centers of the mean squared neighbor error.

    For center ``i`` with valid neighbors ``j_1..j_Ki`` the term is
    ``1/K_i sum_k |D(O_{i,k}) - y_{j_k}|^2`` (squared error summed over
    components). The center token is not decoded. A center without
    neighbors contributes zero; an empty batch gives zero.
    """
    if batch.num_stars == 0:
        return targets.new_zeros(())
    neighbor_tokens = ops.slice_axis(output.tokens, 1, batch.cap + 1, axis=1)
    predicted = decoder(neighbor_tokens)
    safe = batch.neighbor_ids.clamp(min=0).reshape(-1)
    expected = ops.gather(targets, safe).reshape(predicted.shape)

    error = ops.sub(predicted, expected)
    squared = ops.reduce_sum(ops.mul(error, error), axis=-1)
    valid = batch.neighbor_valid.to(squared.dtype)
    per_center = ops.reduce_sum(ops.mul(squared, valid), axis=-1)
    counts = torch.clamp(ops.reduce_sum(valid, axis=-1), min=1.0)
    return ops.reduce_mean(ops.div(per_center, counts))


def combine_losses(
    main: torch.Tensor, mnp: torch.Tensor, alpha: float = DEFAULT_ALPHA
) -> torch.Tensor:
    """``L = L_main + alpha * L_MNP``."""
    return ops.add(main, ops.mul(mnp, alpha))
