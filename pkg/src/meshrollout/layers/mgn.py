"""MeshGraphNet message-passing block."""

from typing import Optional

import torch
from torch import nn

from meshrollout.autodiff import ops

from .exceptions import EdgeAlignmentError
from .mlp import MLP, check_width


def scatter_sum(values: torch.Tensor, index: torch.Tensor, num_nodes: int) -> torch.Tensor:
    """Sum rows of ``values`` into ``num_nodes`` buckets given by ``index``."""
    out = values.new_zeros(num_nodes, values.shape[-1])
    return out.index_add(0, index, values)


class MgnBlock(nn.Module):
    """Edge update ``f^e(e_k, z_r, z_s)``, receiver sum, node update ``f^v``.

    ``forward`` returns the raw outputs ``(f^v([z, e_bar]), f^e(...))``; the
    caller adds them to the running node and edge latents.
    """

    def __init__(self, width: int, hidden: Optional[int] = None):
        super().__init__()
        hidden = hidden or width
        self.width = width
        self.edge_mlp = MLP(3 * width, hidden, width)
        self.node_mlp = MLP(2 * width, hidden, width)

    def forward(
        self,
        z: torch.Tensor,
        edge_latents: torch.Tensor,
        senders: torch.Tensor,
        receivers: torch.Tensor,
    ) -> tuple[torch.Tensor, torch.Tensor]:
        check_width("mgn_block", z, self.width)
        check_width("mgn_block", edge_latents, self.width)
        if edge_latents.shape[0] != senders.shape[0] or senders.shape != receivers.shape:
            raise EdgeAlignmentError(int(edge_latents.shape[0]), int(senders.shape[0]))

        edge_input = ops.concat(
            [edge_latents, ops.gather(z, receivers), ops.gather(z, senders)], axis=-1
        )
        edge_update = self.edge_mlp(edge_input)
        aggregated = scatter_sum(edge_update, receivers, z.shape[0])
        node_update = self.node_mlp(ops.concat([z, aggregated], axis=-1))
        return node_update, edge_update
