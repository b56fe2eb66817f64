"""Declarative configuration of the surrogate model."""

from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from meshrollout.layers import Architecture, PeMode
from meshrollout.mnp import DEFAULT_ALPHA, DEFAULT_NEIGHBOR_CAP, CenterBias
from meshrollout.temporal import CorrectionFrequency, GateMode


class MnpConfig(BaseModel):
    """Multi-node prediction head and its share of the loss."""

    model_config = ConfigDict(extra="forbid")

    enabled: bool = Field(default=False, description="Attach the multi-node head")
    centers: int = Field(default=256, ge=0, description="Star centers per step")
    K: int = Field(default=DEFAULT_NEIGHBOR_CAP, ge=1, description="Neighbor cap")
    alpha: float = Field(default=DEFAULT_ALPHA, ge=0.0, description="Loss weight")
    bias: CenterBias = Field(default=CenterBias.UNIFORM, description="Center sampling law")
    exclude_center_as_key: bool = Field(
        default=False, description="Neighbors do not attend to the center token"
    )


class TemporalConfig(BaseModel):
    """Predictor-corrector blocks."""

    model_config = ConfigDict(extra="forbid")

    enabled: bool = Field(default=False, description="Add correctors")
    frequency: CorrectionFrequency = Field(default=CorrectionFrequency.EVERY_LAYER)
    gate_mode: GateMode = Field(default=GateMode.SIGMOID)
    use_attention: bool = True
    use_gate: bool = True
    use_mixer: bool = True
    intermediate_supervision: bool = Field(
        default=False, description="Decode and supervise after every corrector"
    )


_ATTENTION_ONLY_MODES = {PeMode.ROPE, PeMode.LEARNED_RELBIAS, PeMode.DISTANCE_WEIGHTED}


class ModelConfig(BaseModel):
    """Encode-process-decode surrogate over one processor family."""

    model_config = ConfigDict(extra="forbid")

    architecture: Architecture = Field(default=Architecture.TRANSFORMER)
    depth: int = Field(default=4, ge=1, description="Number of processor blocks L")
    width: int = Field(default=64, ge=1, description="Latent width d")
    heads: int = Field(default=4, ge=1, description="Attention heads H")
    num_slices: int = Field(default=8, ge=1, description="Transolver slices M")
    mlp_hidden: Optional[int] = Field(
        default=None, ge=1, description="Feed-forward hidden width override"
    )
    pe_mode: PeMode = Field(default=PeMode.NONE)
    hadamard: bool = Field(
        default=False, description="Multiply logits by the adjacency instead of masking"
    )
    include_positions: bool = Field(
        default=False, description="Append absolute coordinates to node inputs"
    )
    include_history: bool = Field(
        default=False, description="Append the previous-step time derivative"
    )
    jumpers: Optional[int] = Field(
        default=None,
        ge=0,
        description="Random long-range edges for the transformer (default 5% of N)",
    )
    mnp: MnpConfig = Field(default_factory=MnpConfig)
    temporal: TemporalConfig = Field(default_factory=TemporalConfig)

    @model_validator(mode="after")
    def check_consistency(self) -> "ModelConfig":
        if self.width % self.heads != 0:
            raise ValueError(f"width {self.width} is not divisible by {self.heads} heads")
        if (
            self.architecture != Architecture.TRANSFORMER
            and self.pe_mode in _ATTENTION_ONLY_MODES
        ):
            raise ValueError(
                f"pe_mode '{self.pe_mode.value}' needs the transformer processor"
            )
        return self

    @property
    def head_dim(self) -> int:
        return self.width // self.heads

    def corrected_layers(self) -> list[int]:
        """Indices of the blocks followed by a corrector."""
        if not self.temporal.enabled:
            return []
        if self.temporal.frequency == CorrectionFrequency.LAST_LAYER:
            return [self.depth - 1]
        return list(range(self.depth))
