"""Auxiliary head that turns final latents into the multi-node loss."""

from collections.abc import Callable
from typing import Optional

import numpy as np
import torch
from torch import nn

from meshrollout.mesh import MeshGraph

from .loss import mnp_loss
from .ring import RingTransformer
from .stars import DEFAULT_NEIGHBOR_CAP, build_stars


class MnpHead(nn.Module):
    """Ring transformer plus star packing for a fixed neighbor cap."""

    def __init__(
        self,
        width: int,
        heads: int,
        cap: int = DEFAULT_NEIGHBOR_CAP,
        exclude_center_as_key: bool = False,
    ):
        super().__init__()
        self.cap = cap
        self.ring = RingTransformer(width, heads, exclude_center_as_key)

    def forward(
        self,
        z_last: torch.Tensor,
        z_first: torch.Tensor,
        mesh: MeshGraph,
        centers: np.ndarray,
        decoder: Callable[[torch.Tensor], torch.Tensor],
        targets: torch.Tensor,
        table: Optional[np.ndarray] = None,
    ) -> torch.Tensor:
        batch = build_stars(z_last, z_first, mesh, centers, self.cap, table)
        return mnp_loss(self.ring(batch), decoder, targets, batch)
