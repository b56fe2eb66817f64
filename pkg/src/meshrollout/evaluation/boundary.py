"""Boundary-condition enforcement by node type."""

from typing import Union

import numpy as np
import torch

from meshrollout.data import FieldKind, FieldSchema
from meshrollout.mesh import NodeType

FREE_VELOCITY_TYPES = (NodeType.NORMAL, NodeType.OUTFLOW)

ArrayLike = Union[np.ndarray, torch.Tensor]


def enforced_entries(node_type: np.ndarray, schema: FieldSchema) -> np.ndarray:
    """``N x c`` mask of the entries overwritten with ground truth.

    Velocity components are imposed on every node type except Normal and
    Outflow; scalar components only on Inflow nodes.
    """
    node_type = np.asarray(node_type)
    mask = np.zeros((node_type.shape[0], schema.num_components), dtype=bool)
    velocity_nodes = ~np.isin(node_type, [int(t) for t in FREE_VELOCITY_TYPES])
    inflow_nodes = node_type == NodeType.INFLOW
    for k, spec in enumerate(schema.fields):
        mask[:, k] = velocity_nodes if spec.kind == FieldKind.VELOCITY else inflow_nodes
    return mask


def enforce_bc(
    predicted: ArrayLike,
    truth: ArrayLike,
    node_type: np.ndarray,
    schema: FieldSchema,
) -> ArrayLike:
    """Copy of ``predicted`` with the enforced entries taken from ``truth``."""
    mask = enforced_entries(node_type, schema)
    if isinstance(predicted, torch.Tensor):
        support = torch.as_tensor(mask, device=predicted.device)
        return torch.where(support, truth.to(predicted.dtype), predicted)
    return np.where(mask, truth, predicted)
