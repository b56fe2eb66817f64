"""Process-level configuration using Pydantic Settings."""

from pathlib import Path
from typing import Literal

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Runtime settings shared by every command.

    Values come from ``MESHROLLOUT_*`` environment variables or a ``.env`` file.
    Experiment descriptions (dataset, model, training) live in
    :class:`meshrollout.cli.config.ExperimentConfig` instead.
    """

    # Application settings
    app_name: str = Field(default="meshrollout", description="Application name")
    debug: bool = Field(default=False, description="Enable debug mode")
    environment: str = Field(
        default="development",
        description="Environment (development, staging, production)",
    )
    log_level: str = Field(
        default="INFO", description="Logging level (DEBUG, INFO, WARNING, ERROR)"
    )

    # Numerics settings
    precision: Literal["f32", "f64"] = Field(
        default="f32",
        description="Floating point precision (f32 for training, f64 for verification)",
    )
    deterministic: bool = Field(
        default=True, description="Request deterministic torch kernels"
    )

    # Runtime settings
    threads: int = Field(
        default=1, ge=1, description="Worker threads for generation and sweeps"
    )
    output_dir: Path = Field(
        default=Path("runs"), description="Default root directory for run artifacts"
    )

    # Observability settings
    service_name: str = Field(
        default="meshrollout", description="Service name for telemetry"
    )
    jaeger_agent_host: str = Field(
        default="localhost", description="Jaeger agent host for Thrift exporter"
    )
    jaeger_agent_port: int = Field(
        default=6831, description="Jaeger agent port for Thrift exporter"
    )
    enable_tracing: bool = Field(
        default=False, description="Enable tracing with OpenTelemetry"
    )

    model_config = SettingsConfigDict(
        env_prefix="MESHROLLOUT_",
        env_file=".env",
        case_sensitive=False,
        env_file_encoding="utf-8",
        extra="ignore",
    )

    @property
    def is_development(self) -> bool:
        """Check if running in development environment."""
        return self.environment.lower() == "development"

    @property
    def is_production(self) -> bool:
        """Check if running in production environment."""
        return self.environment.lower() == "production"


def get_settings() -> Settings:
    """Get a fresh settings instance (re-reads the environment)."""
    return Settings()


settings = get_settings()
