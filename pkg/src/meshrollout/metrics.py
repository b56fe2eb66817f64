"""Wall-clock timing metrics for commands and training steps."""

import functools
import time
from typing import Any

import structlog

logger = structlog.get_logger(__name__)


class RunMetrics:
    """Collects operation durations and failure counts."""

    def __init__(self) -> None:
        """Initialize metrics collector."""
        self.operation_times: dict[str, list[float]] = {}
        self.operation_counts: dict[str, int] = {}
        self.error_counts: dict[str, int] = {}

    def record_operation(
        self, operation: str, duration: float, success: bool = True
    ) -> None:
        """Record operation timing and success/failure.

        Args:
            operation: Name of the operation
            duration: Operation duration in seconds
            success: Whether the operation was successful
        """
        self.operation_times.setdefault(operation, []).append(duration)
        self.operation_counts[operation] = self.operation_counts.get(operation, 0) + 1
        if not success:
            self.error_counts[operation] = self.error_counts.get(operation, 0) + 1

        logger.debug(
            "Operation recorded",
            operation=operation,
            duration=duration,
            success=success,
        )

    def get_operation_stats(self, operation: str) -> dict[str, Any]:
        """Get statistics for a specific operation.

        Args:
            operation: Name of the operation

        Returns:
            dictionary with operation statistics
        """
        times = sorted(self.operation_times.get(operation, []))
        total_count = self.operation_counts.get(operation, 0)
        error_count = self.error_counts.get(operation, 0)

        if not times:
            return {
                "operation": operation,
                "total_count": 0,
                "error_count": 0,
                "total_duration": 0.0,
                "avg_duration": 0.0,
                "max_duration": 0.0,
            }

        return {
            "operation": operation,
            "total_count": total_count,
            "error_count": error_count,
            "total_duration": sum(times),
            "avg_duration": sum(times) / len(times),
            "min_duration": times[0],
            "max_duration": times[-1],
            "p50_duration": times[len(times) // 2],
            "p95_duration": times[int(len(times) * 0.95)],
        }

    def get_all_stats(self) -> dict[str, Any]:
        """Get statistics for all operations, keyed by operation name."""
        return {
            operation: self.get_operation_stats(operation)
            for operation in sorted(self.operation_counts)
        }

    def reset(self) -> None:
        """Reset all metrics."""
        self.operation_times.clear()
        self.operation_counts.clear()
        self.error_counts.clear()


# Global metrics instance
_metrics = RunMetrics()


def get_metrics() -> RunMetrics:
    """Get the global metrics instance."""
    return _metrics


def record_operation(operation: str, duration: float, success: bool = True) -> None:
    """Record an operation in the global metrics."""
    _metrics.record_operation(operation, duration, success)


def operation_timer(operation: str):
    """Decorator to time a call and record it under ``operation``.

    Args:
        operation: Name of the operation to record

    Returns:
        Decorator function
    """

    def decorator(func):
        @functools.wraps(func)
        def wrapper(*args, **kwargs):
            start_time = time.perf_counter()
            try:
                result = func(*args, **kwargs)
            except Exception:
                record_operation(
                    operation, time.perf_counter() - start_time, success=False
                )
                raise
            record_operation(operation, time.perf_counter() - start_time)
            return result

        return wrapper

    return decorator
