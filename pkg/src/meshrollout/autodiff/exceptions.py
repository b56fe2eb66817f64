"""Custom exceptions for the differentiable core."""

from collections.abc import Sequence
from typing import Optional

from meshrollout.exceptions import MeshRolloutError


class AutodiffError(MeshRolloutError):
    """Base exception for tensor primitives and gradient bookkeeping."""


class ShapeMismatchError(AutodiffError):
    """Raised when a primitive receives incompatible shapes."""

    def __init__(
        self, op: str, shapes: Sequence[Sequence[int]], details: Optional[str] = None
    ):
        """Initialize with the primitive name and offending shapes."""
        rendered = ", ".join(str(tuple(s)) for s in shapes)
        message = f"Shape mismatch in '{op}': {rendered}"
        if details:
            message = f"{message} ({details})"
        super().__init__(message, details)
        self.op = op
        self.shapes = [tuple(s) for s in shapes]


class NonScalarLossError(AutodiffError):
    """Raised when backward is called on a tensor with more than one element."""

    def __init__(self, shape: Sequence[int], details: Optional[str] = None):
        """Initialize with the loss shape."""
        super().__init__(
            f"backward requires a scalar loss, got shape {tuple(shape)}", details
        )
        self.shape = tuple(shape)


class EmptyTapeError(AutodiffError):
    """Raised when the loss was not produced by any recorded operation."""

    def __init__(self, details: Optional[str] = None):
        """Initialize empty tape error."""
        super().__init__("loss has no recorded operations to differentiate", details)


class TapeConsumedError(AutodiffError):
    """Raised on a second backward pass through an already consumed graph."""

    def __init__(self, details: Optional[str] = None):
        """Initialize consumed tape error."""
        super().__init__(
            "backward already ran on this tape; call reset() and recompute", details
        )


class EmptyAttentionRowError(AutodiffError):
    """Raised when a masked softmax row admits no entry."""

    def __init__(self, rows: Sequence[int], details: Optional[str] = None):
        """Initialize with the first offending row indices."""
        preview = list(rows)[:5]
        super().__init__(
            f"masked softmax has {len(rows)} rows without admitted entries, "
            f"first rows {preview}",
            details,
        )
        self.rows = list(rows)
