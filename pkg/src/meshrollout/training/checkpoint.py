"""Versioned checkpoints of model, optimizer and random state."""

from pathlib import Path
from typing import Any, Optional, Union

import numpy as np
import structlog
import torch
from torch import nn

from .exceptions import CheckpointError

logger = structlog.get_logger(__name__)

CHECKPOINT_VERSION = 1
CHECKPOINT_PATTERN = "step_{step:08d}.pt"


def checkpoint_path(run_dir: Union[str, Path], step: int) -> Path:
    return Path(run_dir) / "checkpoints" / CHECKPOINT_PATTERN.format(step=step)


def save_checkpoint(
    path: Union[str, Path],
    model: nn.Module,
    optimizer: Optional[torch.optim.Optimizer],
    step: int,
    config_hash: str,
    extra: Optional[dict[str, Any]] = None,
) -> Path:
    """Write parameters, optimizer moments, step counter and config hash."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "version": CHECKPOINT_VERSION,
        "config_hash": config_hash,
        "step": step,
        "model": model.state_dict(),
        "optimizer": optimizer.state_dict() if optimizer is not None else None,
        "torch_rng": torch.get_rng_state(),
        "extra": extra or {},
    }
    torch.save(payload, path)
    logger.info("Saved checkpoint", path=str(path), step=step)
    return path


def load_checkpoint(
    path: Union[str, Path],
    model: nn.Module,
    optimizer: Optional[torch.optim.Optimizer] = None,
    config_hash: Optional[str] = None,
) -> dict[str, Any]:
    """Restore ``model`` (and ``optimizer``) in place; returns the payload.

    A version mismatch or, when ``config_hash`` is given, a checkpoint
    written for another configuration raises :class:`CheckpointError`.
    """
    path = Path(path)
    if not path.exists():
        raise CheckpointError(str(path), "file not found")
    try:
        payload = torch.load(path, map_location="cpu", weights_only=False)
    except Exception as e:
        raise CheckpointError(str(path), f"unreadable ({e})") from e
    if payload.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(
            str(path), f"version {payload.get('version')} != {CHECKPOINT_VERSION}"
        )
    if config_hash is not None and payload["config_hash"] != config_hash:
        raise CheckpointError(str(path), "written for a different configuration")

    model.load_state_dict(payload["model"])
    if optimizer is not None and payload["optimizer"] is not None:
        optimizer.load_state_dict(payload["optimizer"])
    torch.set_rng_state(payload["torch_rng"])
    logger.info("Loaded checkpoint", path=str(path), step=payload["step"])
    return payload


def latest_checkpoint(run_dir: Union[str, Path]) -> Optional[Path]:
    """Checkpoint with the highest step under ``run_dir``, if any."""
    candidates = sorted((Path(run_dir) / "checkpoints").glob("step_*.pt"))
    if not candidates:
        return None
    steps = np.array([int(p.stem.split("_")[1]) for p in candidates])
    return candidates[int(steps.argmax())]
