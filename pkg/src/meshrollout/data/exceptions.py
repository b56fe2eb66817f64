"""Custom exceptions for synthetic data generation and trajectory files."""

from typing import Optional

from meshrollout.exceptions import MeshRolloutError


class DataError(MeshRolloutError):
    """Base exception for dataset operations."""


class MeshGenerationError(DataError):
    """Raised when a point set cannot be triangulated."""

    def __init__(self, num_points: int, reason: str, details: Optional[str] = None):
        """Initialize with the requested point count and the failure reason."""
        super().__init__(
            f"Cannot generate mesh from {num_points} points: {reason}", details
        )
        self.num_points = num_points
        self.reason = reason


class CflViolationError(DataError):
    """Raised when the requested time step exceeds the explicit stability limit."""

    def __init__(
        self,
        delta_t: float,
        limit: float,
        suggested: float,
        details: Optional[str] = None,
    ):
        """Initialize with the offending step, the limit and a safe suggestion."""
        message = (
            f"delta_t={delta_t:.6g} exceeds the CFL limit {limit:.6g}; "
            f"use delta_t <= {suggested:.6g}"
        )
        super().__init__(message, details)
        self.delta_t = delta_t
        self.limit = limit
        self.suggested = suggested


class InvalidTrajectoryError(DataError):
    """Raised when a trajectory violates its invariants."""

    def __init__(self, reason: str, details: Optional[str] = None):
        """Initialize with the violated invariant."""
        super().__init__(f"Invalid trajectory: {reason}", details)
        self.reason = reason


class HistoryUnavailableError(DataError):
    """Raised when a history feature is requested without a previous step."""

    def __init__(self, step: int, num_steps: int, details: Optional[str] = None):
        """Initialize with the requested step."""
        super().__init__(
            f"No history available at step {step} (trajectory has {num_steps} steps)",
            details,
        )
        self.step = step
        self.num_steps = num_steps


class TrajectoryFileError(DataError):
    """Base exception for trajectory file decoding, carrying an error code."""

    code = "E_FILE"

    def __init__(self, message: str, path: Optional[str] = None, details: Optional[str] = None):
        """Initialize with message and the file path."""
        super().__init__(f"[{self.code}] {message}", details)
        self.path = path


class TrajectoryHeaderError(TrajectoryFileError):
    """Raised for bad magic bytes, versions or header counts."""

    code = "E_HEADER"


class EndiannessError(TrajectoryHeaderError):
    """Raised when the file declares a byte order other than little-endian."""

    code = "E_ENDIAN"


class TruncatedPayloadError(TrajectoryFileError):
    """Raised when the payload is shorter (or longer) than the header implies."""

    code = "E_TRUNCATED"

    def __init__(
        self, expected: int, actual: int, path: Optional[str] = None, details: Optional[str] = None
    ):
        """Initialize with expected and actual payload sizes."""
        super().__init__(
            f"payload has {actual} bytes, header implies {expected}", path, details
        )
        self.expected = expected
        self.actual = actual


class SchemaMismatchError(TrajectoryFileError):
    """Raised when the schema block disagrees with the state component count."""

    code = "E_SCHEMA"
