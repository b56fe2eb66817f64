"""Unstructured mesh graphs: adjacency, neighborhoods, jumpers and geometry.

Usage:
    from meshrollout.mesh import MeshGraph, NodeType, neighborhood

    mesh = MeshGraph.from_undirected(positions, [(0, 1), (1, 2)], node_type)
    neighbors = neighborhood(mesh, 1)  # [0, 2]
"""

from .exceptions import JumperError, MeshError, MeshStructureError, NodeIndexError
from .graph import (
    Adjacency,
    add_jumpers,
    build_adjacency,
    default_jumper_count,
    edge_features,
    geometric_context,
    internal_nodes,
    neighborhood,
    node_type_one_hot,
)
from .models import NUM_NODE_TYPES, GeometricContext, MeshGraph, NodeType

__all__ = [
    # Models
    "MeshGraph",
    "NodeType",
    "NUM_NODE_TYPES",
    "GeometricContext",
    "Adjacency",
    # Operations
    "build_adjacency",
    "neighborhood",
    "add_jumpers",
    "default_jumper_count",
    "internal_nodes",
    "geometric_context",
    "edge_features",
    "node_type_one_hot",
    # Exceptions
    "MeshError",
    "MeshStructureError",
    "NodeIndexError",
    "JumperError",
]
