"""Custom exceptions for model assembly."""

from typing import Optional

from meshrollout.exceptions import MeshRolloutError


class SurrogateError(MeshRolloutError):
    """Base exception for surrogate model assembly."""


class GraphPreparationError(SurrogateError):
    """Raised when a mesh cannot be prepared for the configured processor."""

    def __init__(self, architecture: str, reason: str, details: Optional[str] = None):
        """Initialize with the processor family and the failure reason."""
        super().__init__(f"Cannot prepare mesh for {architecture}: {reason}", details)
        self.architecture = architecture
        self.reason = reason


class ParameterMatchError(SurrogateError):
    """Raised when no width brings the parameter count within tolerance."""

    def __init__(
        self,
        target: int,
        closest: int,
        tolerance: float,
        details: Optional[str] = None,
    ):
        """Initialize with the target count, the closest count found and the tolerance."""
        super().__init__(
            f"No configuration within {tolerance:.1%} of {target} parameters "
            f"(closest {closest})",
            details,
        )
        self.target = target
        self.closest = closest
        self.tolerance = tolerance
