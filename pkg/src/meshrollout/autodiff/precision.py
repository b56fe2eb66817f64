"""Floating point precision, seeding and thread settings for torch."""

import random
from collections.abc import Iterator
from contextlib import contextmanager
from enum import Enum
from typing import Optional, Union

import numpy as np
import structlog
import torch

from meshrollout.config import get_settings

logger = structlog.get_logger(__name__)

DTensor = torch.Tensor


class Precision(str, Enum):
    """Numeric precision modes."""

    F32 = "f32"
    F64 = "f64"


_DTYPES = {Precision.F32: torch.float32, Precision.F64: torch.float64}

PrecisionLike = Optional[Union[Precision, str]]


def resolve_dtype(precision: PrecisionLike = None) -> torch.dtype:
    """Map a precision name to a torch dtype; ``None`` reads the settings."""
    if precision is None:
        precision = get_settings().precision
    return _DTYPES[Precision(precision)]


@contextmanager
def precision_scope(precision: PrecisionLike) -> Iterator[torch.dtype]:
    """Temporarily switch torch's default floating dtype."""
    previous = torch.get_default_dtype()
    dtype = resolve_dtype(precision)
    torch.set_default_dtype(dtype)
    try:
        yield dtype
    finally:
        torch.set_default_dtype(previous)


def tensor(
    data, requires_grad: bool = False, precision: PrecisionLike = None
) -> DTensor:
    """Create a fresh leaf tensor with the configured precision."""
    dtype = resolve_dtype(precision)
    if isinstance(data, torch.Tensor):
        value = data.detach().to(dtype).clone()
    else:
        value = torch.as_tensor(np.asarray(data), dtype=dtype).clone()
    return value.requires_grad_(requires_grad)


def seed_everything(seed: int) -> None:
    """Seed torch, numpy's legacy global state and ``random``."""
    random.seed(seed)
    np.random.seed(seed % (2**32))
    torch.manual_seed(seed)


def configure_runtime(threads: int = 1, deterministic: bool = True) -> None:
    """Apply thread count and determinism flags process-wide."""
    torch.set_num_threads(threads)
    torch.use_deterministic_algorithms(deterministic, warn_only=True)
    logger.debug("Configured torch runtime", threads=threads, deterministic=deterministic)
