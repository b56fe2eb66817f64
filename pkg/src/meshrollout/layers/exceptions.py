"""Custom exceptions for neural network layers."""

from typing import Optional

from meshrollout.exceptions import MeshRolloutError


class LayerError(MeshRolloutError):
    """Base exception for layer construction and forward passes."""


class HeadConfigError(LayerError):
    """Raised when the latent width is not divisible by the head count."""

    def __init__(self, width: int, heads: int, details: Optional[str] = None):
        """Initialize with the offending width and head count."""
        super().__init__(f"width {width} is not divisible by {heads} heads", details)
        self.width = width
        self.heads = heads


class FeatureWidthError(LayerError):
    """Raised when an input's last axis does not match the layer width."""

    def __init__(self, layer: str, expected: int, actual: int, details: Optional[str] = None):
        """Initialize with the layer name and both widths."""
        super().__init__(f"{layer} expects width {expected}, got {actual}", details)
        self.layer = layer
        self.expected = expected
        self.actual = actual


class RopeConfigError(LayerError):
    """Raised when a rotary configuration is inconsistent with the head width."""


class EdgeAlignmentError(LayerError):
    """Raised when edge latents do not line up with the edge list."""

    def __init__(self, num_latents: int, num_edges: int, details: Optional[str] = None):
        """Initialize with both counts."""
        super().__init__(
            f"{num_latents} edge latents for {num_edges} edges", details
        )
        self.num_latents = num_latents
        self.num_edges = num_edges
