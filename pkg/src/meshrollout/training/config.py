"""Declarative configuration of a training run."""

from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator

from meshrollout.data import NoiseSpec


class AuxLossConfig(BaseModel):
    """Optional Sobolev-type and directional auxiliary losses."""

    model_config = ConfigDict(extra="forbid")

    grad_supervision: bool = Field(default=False, description="WLS gradient loss")
    grad_weight: float = Field(default=0.1, ge=0.0)
    divergence: bool = Field(default=False, description="Velocity divergence penalty")
    divergence_weight: float = Field(default=0.01, ge=0.0)
    cosine_sim: bool = Field(default=False, description="1 - cosine similarity")
    cosine_weight: float = Field(default=0.1, ge=0.0)

    @property
    def any_enabled(self) -> bool:
        return self.grad_supervision or self.divergence or self.cosine_sim


class TrainConfig(BaseModel):
    """Optimizer, schedule, noise and bookkeeping of next-step training."""

    model_config = ConfigDict(extra="forbid")

    # Optimization
    epochs: int = Field(default=1, ge=0, description="Passes over all (trajectory, t)")
    max_steps: Optional[int] = Field(
        default=None, ge=0, description="Stop after this many optimizer steps"
    )
    max_lr: float = Field(default=1e-3, ge=0.0, description="Peak learning rate")
    warmup_steps: int = Field(default=1000, ge=1, description="Linear warmup steps")
    betas: tuple[float, float] = Field(default=(0.9, 0.95))
    eps: float = Field(default=1e-8, gt=0.0)
    weight_decay: float = Field(default=0.01, ge=0.0, description="Decoupled decay")
    accumulation: int = Field(
        default=1, ge=1, description="Timestep pairs per optimizer step"
    )

    # Data
    noise: dict[str, float] = Field(
        default_factory=dict, description="Input noise sigma per state component"
    )
    exclude_enforced_from_loss: bool = Field(
        default=False, description="Drop boundary-enforced entries from the main loss"
    )
    prefetch: int = Field(
        default=2, ge=0, description="Samples prepared ahead on a worker thread"
    )

    # Auxiliary terms
    aux: AuxLossConfig = Field(default_factory=AuxLossConfig)

    # Bookkeeping
    seeds: list[int] = Field(default_factory=lambda: [0], min_length=1)
    checkpoint_every: int = Field(default=0, ge=0, description="0 checkpoints at end only")
    latent_probe: bool = Field(
        default=False, description="Record latent-to-target distances at checkpoints"
    )
    log_every: int = Field(default=1, ge=1)

    @field_validator("betas")
    @classmethod
    def check_betas(cls, value: tuple[float, float]) -> tuple[float, float]:
        if not all(0.0 <= b < 1.0 for b in value):
            raise ValueError(f"betas must lie in [0, 1), got {value}")
        return value

    def noise_spec(self) -> NoiseSpec:
        spec = NoiseSpec(sigma=dict(self.noise))
        spec.validate()
        return spec
