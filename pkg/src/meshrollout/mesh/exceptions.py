"""Custom exceptions for mesh graph construction and queries."""

from typing import Optional

from meshrollout.exceptions import MeshRolloutError


class MeshError(MeshRolloutError):
    """Base exception for mesh graph operations."""


class MeshStructureError(MeshError):
    """Raised when a mesh violates a structural invariant."""

    def __init__(self, reason: str, details: Optional[str] = None):
        """Initialize structure error with the violated invariant."""
        super().__init__(f"Invalid mesh structure: {reason}", details)
        self.reason = reason


class NodeIndexError(MeshError):
    """Raised when a node index is outside ``[0, N)``."""

    def __init__(self, index: int, num_nodes: int, details: Optional[str] = None):
        """Initialize index error."""
        message = f"Node index {index} out of range for mesh with {num_nodes} nodes"
        super().__init__(message, details)
        self.index = index
        self.num_nodes = num_nodes


class JumperError(MeshError):
    """Raised when more jumpers are requested than non-edges exist."""

    def __init__(self, requested: int, available: int, details: Optional[str] = None):
        """Initialize jumper error with requested and available counts."""
        message = (
            f"Cannot add {requested} jumpers: only {available} non-adjacent pairs"
        )
        super().__init__(message, details)
        self.requested = requested
        self.available = available
