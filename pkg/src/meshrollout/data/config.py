"""Declarative configuration of the synthetic dataset."""

from typing import Optional

from pydantic import BaseModel, ConfigDict, Field

from .models import SimulationParams


class DatasetConfig(BaseModel):
    """Size, resolution and physics of a generated train/test split."""

    model_config = ConfigDict(extra="forbid")

    num_nodes: int = Field(default=1000, ge=4, description="Target nodes per mesh")
    steps: int = Field(default=100, ge=1, description="Solver steps per trajectory")
    delta_t: float = Field(default=0.002, gt=0.0, description="Time step (s)")
    num_train: int = Field(default=50, ge=0, description="Training trajectories")
    num_test: int = Field(default=10, ge=0, description="Test trajectories")
    seed: int = Field(default=0, ge=0, description="Root seed of the split")
    params: SimulationParams = Field(default_factory=SimulationParams)
    obstacle_radius: Optional[float] = Field(
        default=None, gt=0.0, lt=0.2, description="Radius of a circular obstacle"
    )
    advection_jitter: float = Field(
        default=0.0,
        ge=0.0,
        lt=1.0,
        description="Per-trajectory advection scale drawn from U(1 - j, 1 + j)",
    )
