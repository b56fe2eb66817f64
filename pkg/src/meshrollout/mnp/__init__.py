"""Multi-node prediction: center sampling, star packing, ring transformer, loss."""

from .centers import CenterBias, CenterSampler, boundary_distance, sample_centers
from .exceptions import CenterSamplingError, MnpError
from .head import MnpHead
from .loss import DEFAULT_ALPHA, combine_losses, mnp_loss
from .ring import MnpOutput, RingTransformer
from .stars import DEFAULT_NEIGHBOR_CAP, StarBatch, build_stars, neighbor_table

__all__ = [
    # Models
    "StarBatch",
    "MnpOutput",
    "CenterBias",
    "DEFAULT_NEIGHBOR_CAP",
    "DEFAULT_ALPHA",
    # Operations
    "sample_centers",
    "boundary_distance",
    "CenterSampler",
    "neighbor_table",
    "build_stars",
    "RingTransformer",
    "MnpHead",
    "mnp_loss",
    "combine_losses",
    # Exceptions
    "MnpError",
    "CenterSamplingError",
]
