"""Custom exceptions for multi-node prediction."""

from typing import Optional

from meshrollout.exceptions import MeshRolloutError


class MnpError(MeshRolloutError):
    """Base exception for multi-node prediction."""


class CenterSamplingError(MnpError):
    """Raised when more centers are requested than internal nodes exist."""

    def __init__(self, requested: int, available: int, details: Optional[str] = None):
        """Initialize with requested and available center counts."""
        super().__init__(
            f"Cannot sample {requested} centers from {available} internal nodes", details
        )
        self.requested = requested
        self.available = available
