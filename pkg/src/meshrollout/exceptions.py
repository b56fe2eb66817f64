"""Root exception shared by every meshrollout subpackage."""

from typing import Optional


class MeshRolloutError(Exception):
    """Base exception for meshrollout operations."""

    def __init__(self, message: str, details: Optional[str] = None):
        """Initialize with message and optional details."""
        super().__init__(message)
        self.message = message
        self.details = details
