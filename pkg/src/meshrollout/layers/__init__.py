"""Neural building blocks: perceptrons, attention, positional encodings, processors."""

from .attention import MaskedMultiHeadAttention
from .blocks import (
    Architecture,
    GraphContext,
    MgnSpatialBlock,
    SpatialBlock,
    TransformerSpatialBlock,
    TransolverSpatialBlock,
    build_spatial_block,
)
from .exceptions import (
    EdgeAlignmentError,
    FeatureWidthError,
    HeadConfigError,
    LayerError,
    RopeConfigError,
)
from .mgn import MgnBlock, scatter_sum
from .mlp import (
    MLP,
    Activation,
    GatedMLP,
    RMSNorm,
    build_decoder,
    build_encoder,
    count_parameters,
    he_uniform_,
    zero_,
)
from .positional import (
    LearnedAbsoluteEmbedding,
    LearnedRelativeBias,
    PeMode,
    distance_weighted_adjacency,
)
from .rope import RopeConfig, apply_rope, build_rope_config, rotation_angles
from .transformer import TransformerBlock
from .transolver import TransolverBlock

__all__ = [
    # Perceptrons and normalization
    "Activation",
    "MLP",
    "RMSNorm",
    "GatedMLP",
    "build_encoder",
    "build_decoder",
    "count_parameters",
    "he_uniform_",
    "zero_",
    # Attention and positional encodings
    "MaskedMultiHeadAttention",
    "PeMode",
    "RopeConfig",
    "build_rope_config",
    "rotation_angles",
    "apply_rope",
    "LearnedAbsoluteEmbedding",
    "LearnedRelativeBias",
    "distance_weighted_adjacency",
    # Processors
    "Architecture",
    "GraphContext",
    "SpatialBlock",
    "MgnBlock",
    "scatter_sum",
    "TransformerBlock",
    "TransolverBlock",
    "MgnSpatialBlock",
    "TransformerSpatialBlock",
    "TransolverSpatialBlock",
    "build_spatial_block",
    # Exceptions
    "LayerError",
    "HeadConfigError",
    "FeatureWidthError",
    "RopeConfigError",
    "EdgeAlignmentError",
]
