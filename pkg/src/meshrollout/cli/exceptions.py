"""Custom exceptions for the command-line interface."""

from collections.abc import Sequence
from typing import Optional

from meshrollout.exceptions import MeshRolloutError


class CliError(MeshRolloutError):
    """Base exception for command failures (exit code 1)."""


class ConfigError(CliError):
    """Base exception for unusable experiment configurations (exit code 2)."""


class ConfigFileError(ConfigError):
    """Raised when a config file is missing or is not valid JSON."""

    def __init__(
        self,
        path: str,
        reason: str,
        line: Optional[int] = None,
        column: Optional[int] = None,
        details: Optional[str] = None,
    ):
        """Initialize with the file, the parser message and its position."""
        where = f":{line}:{column}" if line is not None else ""
        super().__init__(f"{path}{where}: {reason}", details)
        self.path = path
        self.reason = reason
        self.line = line
        self.column = column


class ConfigValidationError(ConfigError):
    """Raised when a config file parses but violates the schema."""

    def __init__(
        self, path: str, problems: Sequence[str], details: Optional[str] = None
    ):
        """Initialize with one ``dotted.key: message`` entry per problem."""
        super().__init__(f"{path}: invalid configuration: {'; '.join(problems)}", details)
        self.path = path
        self.problems = list(problems)


class MissingArtifactError(CliError):
    """Raised when a command needs an artifact an earlier command writes."""

    def __init__(self, artifact: str, hint: str, details: Optional[str] = None):
        """Initialize with the missing path and the command that produces it."""
        super().__init__(f"Missing {artifact}; {hint}", details)
        self.artifact = artifact
        self.hint = hint
