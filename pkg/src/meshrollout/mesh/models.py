"""Mesh graph data models."""

from dataclasses import dataclass
from enum import IntEnum
from functools import cached_property
from typing import TYPE_CHECKING, Optional

import numpy as np

from .exceptions import MeshStructureError

if TYPE_CHECKING:
    from .graph import Adjacency


class NodeType(IntEnum):
    """Boundary label attached to every mesh node."""

    NORMAL = 0
    INFLOW = 1
    OUTFLOW = 2
    WALL = 3
    OBSTACLE = 4


NUM_NODE_TYPES = len(NodeType)


@dataclass(frozen=True, eq=False)
class MeshGraph:
    """Undirected mesh stored as a symmetric list of directed edges.

    ``edges`` holds ``(sender, receiver)`` rows. Both directions of every
    undirected edge are present and the rows are kept in lexicographic order,
    so two meshes built from the same edge set compare equal row by row.
    ``cells`` optionally keeps the triangles the graph was derived from; the
    synthetic solver needs them, the learned models do not.
    """

    positions: np.ndarray
    edges: np.ndarray
    node_type: np.ndarray
    cells: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        # Own copies: freezing must not reach the caller's arrays.
        positions = np.array(self.positions, dtype=np.float64, order="C")
        if positions.ndim != 2 or positions.shape[1] not in (2, 3):
            raise MeshStructureError(
                f"positions must be N x 2 or N x 3, got shape {positions.shape}"
            )
        num_nodes = positions.shape[0]

        node_type = np.array(self.node_type, dtype=np.int64).reshape(-1)
        if node_type.shape[0] != num_nodes:
            raise MeshStructureError(
                f"node_type has {node_type.shape[0]} labels for {num_nodes} nodes"
            )
        if node_type.size and (node_type.min() < 0 or node_type.max() >= NUM_NODE_TYPES):
            raise MeshStructureError("node_type contains unknown labels")

        edges = np.array(self.edges, dtype=np.int64).reshape(-1, 2)
        if edges.size:
            if edges.min() < 0 or edges.max() >= num_nodes:
                bad = int(edges[(edges < 0) | (edges >= num_nodes)][0])
                raise MeshStructureError(
                    f"edge index {bad} out of range [0, {num_nodes})"
                )
            if np.any(edges[:, 0] == edges[:, 1]):
                raise MeshStructureError("self-loops are not allowed")
            edges = np.unique(edges, axis=0)
            forward = edges[:, 0] * num_nodes + edges[:, 1]
            backward = np.sort(edges[:, 1] * num_nodes + edges[:, 0])
            if not np.array_equal(forward, backward):
                raise MeshStructureError("edge list is not symmetric")

        cells = self.cells
        if cells is not None:
            cells = np.array(cells, dtype=np.int64).reshape(-1, 3)
            if cells.size and (cells.min() < 0 or cells.max() >= num_nodes):
                raise MeshStructureError("cell index out of range")
            cells.setflags(write=False)

        positions.setflags(write=False)
        edges.setflags(write=False)
        node_type.setflags(write=False)
        object.__setattr__(self, "positions", positions)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "node_type", node_type)
        object.__setattr__(self, "cells", cells)

    @classmethod
    def from_undirected(
        cls,
        positions: np.ndarray,
        pairs,
        node_type: np.ndarray,
        cells: Optional[np.ndarray] = None,
    ) -> "MeshGraph":
        """Build a mesh from undirected pairs, adding both directions."""
        pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        edges = np.concatenate([pairs, pairs[:, ::-1]], axis=0)
        return cls(positions=positions, edges=edges, node_type=node_type, cells=cells)

    @classmethod
    def from_cells(
        cls, positions: np.ndarray, cells: np.ndarray, node_type: np.ndarray
    ) -> "MeshGraph":
        """Build the edge graph of a triangulation."""
        cells = np.asarray(cells, dtype=np.int64).reshape(-1, 3)
        pairs = np.concatenate([cells[:, [0, 1]], cells[:, [1, 2]], cells[:, [2, 0]]])
        return cls.from_undirected(positions, pairs, node_type, cells=cells)

    @property
    def num_nodes(self) -> int:
        return int(self.positions.shape[0])

    @property
    def num_edges(self) -> int:
        """Number of directed edges (twice the undirected count)."""
        return int(self.edges.shape[0])

    @property
    def dim(self) -> int:
        return int(self.positions.shape[1])

    @property
    def senders(self) -> np.ndarray:
        return self.edges[:, 0]

    @property
    def receivers(self) -> np.ndarray:
        return self.edges[:, 1]

    @cached_property
    def adjacency(self) -> "Adjacency":
        """Sparse symmetric adjacency, built once per mesh."""
        from .graph import build_adjacency

        return build_adjacency(self)

    def undirected_pairs(self) -> np.ndarray:
        """Each undirected edge once, as ``(i, j)`` with ``i < j``."""
        mask = self.edges[:, 0] < self.edges[:, 1]
        return self.edges[mask]

    def with_node_types(self, node_type: np.ndarray) -> "MeshGraph":
        """Copy of this mesh with replaced boundary labels."""
        return MeshGraph(self.positions, self.edges, node_type, self.cells)


@dataclass(frozen=True, eq=False)
class GeometricContext:
    """Per-mesh geometric quantities used by positional encodings."""

    centered_positions: np.ndarray
    mesh_size_h: float
    mean_position: np.ndarray
    diameter: float
