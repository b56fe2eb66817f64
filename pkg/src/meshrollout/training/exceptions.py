"""Custom exceptions for the training loop."""

from collections.abc import Sequence
from typing import Optional

from meshrollout.exceptions import MeshRolloutError


class TrainingError(MeshRolloutError):
    """Base exception for training."""


class NonFiniteGradientError(TrainingError):
    """Raised when a gradient holds NaN or Inf; the step is not applied."""

    def __init__(
        self,
        step: int,
        parameters: Sequence[str],
        details: Optional[str] = None,
    ):
        """Initialize with the step and the names of the offending parameters."""
        shown = ", ".join(list(parameters)[:5])
        more = "" if len(parameters) <= 5 else f" (+{len(parameters) - 5} more)"
        super().__init__(f"Non-finite gradient at step {step} in {shown}{more}", details)
        self.step = step
        self.parameters = list(parameters)


class CheckpointError(TrainingError):
    """Raised when a checkpoint cannot be read or does not match the run."""

    def __init__(self, path: str, reason: str, details: Optional[str] = None):
        """Initialize with the checkpoint path and the failure reason."""
        super().__init__(f"Checkpoint {path}: {reason}", details)
        self.path = path
        self.reason = reason


class IncompatibleLossError(TrainingError):
    """Raised when an enabled loss term cannot be computed on the data."""

    def __init__(self, loss: str, reason: str, details: Optional[str] = None):
        """Initialize with the loss name and why it does not apply."""
        super().__init__(f"Loss '{loss}' cannot be used: {reason}", details)
        self.loss = loss
        self.reason = reason
