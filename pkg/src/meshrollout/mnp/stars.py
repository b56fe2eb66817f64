"""Packing of star sequences ``[z^L_i; z^0_j1; ...; z^0_jK]``."""

from dataclasses import dataclass
from typing import Optional

import numpy as np
import torch

from meshrollout.autodiff import ops
from meshrollout.mesh import MeshGraph

DEFAULT_NEIGHBOR_CAP = 12


def neighbor_table(mesh: MeshGraph, cap: int) -> np.ndarray:
    """``N x K`` ascending neighbor indices per node, ``-1`` beyond the degree."""
    if cap < 1:
        raise ValueError(f"neighbor cap must be >= 1, got {cap}")
    table = np.full((mesh.num_nodes, cap), -1, dtype=np.int64)
    adjacency = mesh.adjacency
    for i in range(mesh.num_nodes):
        row = adjacency.row(i)[:cap]
        table[i, : row.shape[0]] = row
    return table


@dataclass(eq=False)
class StarBatch:
    """Stars stacked on a leading axis, one sequence of ``K + 1`` tokens each.

    Token 0 is the center latent; tokens ``1..K`` are encoded neighbors in
    ascending index order followed by zero padding. ``valid`` marks real
    tokens. Batching on a leading axis is the block-diagonal mask of the
    flattened sequence: no token sees another star.
    """

    sequences: torch.Tensor
    valid: torch.Tensor
    center_ids: torch.Tensor
    neighbor_ids: torch.Tensor

    @property
    def num_stars(self) -> int:
        return int(self.sequences.shape[0])

    @property
    def cap(self) -> int:
        """Neighbor cap ``K``."""
        return int(self.neighbor_ids.shape[1])

    @property
    def pad_mask(self) -> torch.Tensor:
        return ~self.valid

    @property
    def neighbor_valid(self) -> torch.Tensor:
        return self.valid[:, 1:]

    def attention_mask(self, exclude_center_as_key: bool = False) -> torch.Tensor:
        """``C x (K+1) x (K+1)`` support among valid tokens of each star.

        With ``exclude_center_as_key`` neighbors do not attend to the center;
        the center still attends to itself.
        """
        admitted = self.valid.unsqueeze(-1) & self.valid.unsqueeze(-2)
        if exclude_center_as_key:
            admitted = admitted.clone()
            admitted[:, 1:, 0] = False
        return admitted

    def block_diagonal_mask(self) -> torch.Tensor:
        """Equivalent mask over all ``C (K+1)`` tokens flattened into one sequence."""
        tokens = self.cap + 1
        total = self.num_stars * tokens
        dense = torch.zeros(total, total, dtype=torch.bool)
        per_star = self.attention_mask()
        for s in range(self.num_stars):
            block = slice(s * tokens, (s + 1) * tokens)
            dense[block, block] = per_star[s]
        return dense


def build_stars(
    z_last: torch.Tensor,
    z_first: torch.Tensor,
    mesh: MeshGraph,
    centers: np.ndarray,
    cap: int = DEFAULT_NEIGHBOR_CAP,
    table: Optional[np.ndarray] = None,
) -> StarBatch:
    """Gather center latents from ``z_last`` and neighbor latents from ``z_first``.

    ``table`` may carry a precomputed :func:`neighbor_table` of ``mesh``.
    """
    if table is None or table.shape[1] != cap:
        table = neighbor_table(mesh, cap)
    centers = np.asarray(centers, dtype=np.int64)
    width = z_last.shape[-1]
    neighbors = table[centers] if centers.size else np.empty((0, cap), dtype=np.int64)

    center_index = torch.as_tensor(centers, dtype=torch.long)
    neighbor_index = torch.as_tensor(neighbors, dtype=torch.long)
    neighbor_valid = neighbor_index >= 0
    valid = torch.cat(
        [torch.ones(centers.shape[0], 1, dtype=torch.bool), neighbor_valid], dim=1
    )

    center_tokens = ops.gather(z_last, center_index).unsqueeze(1)
    safe = neighbor_index.clamp(min=0).reshape(-1)
    neighbor_tokens = ops.gather(z_first, safe).reshape(centers.shape[0], cap, width)
    padding = (~neighbor_valid).unsqueeze(-1).expand(neighbor_tokens.shape)
    neighbor_tokens = ops.masked_fill(neighbor_tokens, padding, 0.0)

    return StarBatch(
        sequences=ops.concat([center_tokens, neighbor_tokens], axis=1),
        valid=valid,
        center_ids=center_index,
        neighbor_ids=neighbor_index,
    )
