"""Parameter-matched and fixed-budget model configurations."""

from typing import Optional

import structlog
import torch

from .config import ModelConfig
from .exceptions import ParameterMatchError
from .model import MeshSurrogate

logger = structlog.get_logger(__name__)

DEFAULT_TOLERANCE = 0.02
_MAX_WIDENING = 8


def count_for(config: ModelConfig, in_features: int, out_features: int, dim: int) -> int:
    """Trainable parameters of ``config`` without touching the global torch RNG."""
    with torch.random.fork_rng(devices=[]):
        return MeshSurrogate(config, in_features, out_features, dim).num_parameters


def _fit_hidden(
    config: ModelConfig, target: int, in_features: int, out_features: int, dim: int
) -> ModelConfig:
    # The count is affine in the feed-forward hidden width.
    one = config.model_copy(update={"mlp_hidden": 1})
    two = config.model_copy(update={"mlp_hidden": 2})
    base = count_for(one, in_features, out_features, dim)
    slope = count_for(two, in_features, out_features, dim) - base
    hidden = 1 if slope <= 0 else max(1, 1 + round((target - base) / slope))
    return config.model_copy(update={"mlp_hidden": hidden})


def match_parameters(
    config: ModelConfig,
    target: int,
    in_features: int,
    out_features: int,
    dim: int = 2,
    tolerance: float = DEFAULT_TOLERANCE,
    max_width: Optional[int] = None,
) -> ModelConfig:
    """Widen ``config`` until its parameter count is within ``tolerance`` of ``target``.

    The latent width grows in steps of the head count up to the last width
    not exceeding ``target``; the feed-forward hidden width then closes the
    remaining gap.
    """
    limit = max_width or _MAX_WIDENING * max(config.width, config.heads)
    widths = range(config.heads, limit + 1, config.heads)
    chosen = config.model_copy(update={"width": config.heads})
    for width in widths:
        if width < config.width:
            continue
        candidate = config.model_copy(update={"width": width})
        if count_for(candidate, in_features, out_features, dim) > target:
            break
        chosen = candidate
    if chosen.width < config.width:
        chosen = config

    matched = _fit_hidden(chosen, target, in_features, out_features, dim)
    count = count_for(matched, in_features, out_features, dim)
    if abs(count - target) > tolerance * target:
        raise ParameterMatchError(target, count, tolerance)
    logger.info(
        "Matched parameter count",
        target=target,
        count=count,
        width=matched.width,
        mlp_hidden=matched.mlp_hidden,
    )
    return matched


def width_for_budget(
    config: ModelConfig,
    depth: int,
    budget: int,
    in_features: int,
    out_features: int,
    dim: int = 2,
    tolerance: float = DEFAULT_TOLERANCE,
) -> ModelConfig:
    """Largest width for ``depth`` blocks that fits ``budget`` parameters."""
    narrow = config.model_copy(update={"depth": depth, "width": config.heads})
    limit = _MAX_WIDENING * max(config.width, config.heads)
    return match_parameters(
        narrow, budget, in_features, out_features, dim, tolerance, max_width=limit
    )
