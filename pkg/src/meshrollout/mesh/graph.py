"""Adjacency, neighborhoods, jumpers and geometric quantities of a mesh."""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import structlog

from .exceptions import JumperError, MeshStructureError, NodeIndexError
from .models import NUM_NODE_TYPES, GeometricContext, MeshGraph, NodeType

logger = structlog.get_logger(__name__)


@dataclass(frozen=True, eq=False)
class Adjacency:
    """Symmetric boolean adjacency in CSR form with sorted column indices."""

    matrix: sp.csr_matrix
    degrees: np.ndarray

    @property
    def num_nodes(self) -> int:
        return int(self.matrix.shape[0])

    def row(self, i: int) -> np.ndarray:
        """Neighbor indices of node ``i`` in ascending order."""
        start, stop = self.matrix.indptr[i], self.matrix.indptr[i + 1]
        return self.matrix.indices[start:stop]

    def to_dense(self, self_loops: bool = False) -> np.ndarray:
        """Dense ``N x N`` boolean matrix, optionally with the diagonal set."""
        dense = self.matrix.toarray().astype(bool)
        if self_loops:
            np.fill_diagonal(dense, True)
        return dense


def build_adjacency(mesh: MeshGraph) -> Adjacency:
    """Build the sparse symmetric adjacency ``A`` of a mesh."""
    num_nodes = mesh.num_nodes
    senders, receivers = mesh.senders, mesh.receivers
    if senders.size and (
        senders.min() < 0
        or receivers.min() < 0
        or max(senders.max(), receivers.max()) >= num_nodes
    ):
        raise MeshStructureError(f"edge index out of range [0, {num_nodes})")

    matrix = sp.coo_matrix(
        (np.ones(senders.shape[0], dtype=bool), (senders, receivers)),
        shape=(num_nodes, num_nodes),
    ).tocsr()
    matrix.sum_duplicates()
    matrix.sort_indices()
    degrees = np.diff(matrix.indptr).astype(np.int64)
    return Adjacency(matrix=matrix, degrees=degrees)


def neighborhood(mesh: MeshGraph, i: int) -> list[int]:
    """Neighbors ``N(i)`` in ascending index order."""
    if not 0 <= i < mesh.num_nodes:
        raise NodeIndexError(i, mesh.num_nodes)
    return [int(j) for j in mesh.adjacency.row(i)]


def add_jumpers(mesh: MeshGraph, count: int, seed: int) -> MeshGraph:
    """Add ``count`` random long-range edges between non-adjacent nodes.

    Candidate pairs are every ``i < j`` that is not already an edge; the
    selection is uniform without replacement and inserted in both directions.
    """
    if count < 0:
        raise JumperError(count, 0, details="jumper count must be non-negative")
    if count == 0:
        return mesh

    num_nodes = mesh.num_nodes
    free = ~mesh.adjacency.to_dense(self_loops=True)
    rows, cols = np.nonzero(np.triu(free, k=1))
    if count > rows.shape[0]:
        raise JumperError(count, int(rows.shape[0]))

    rng = np.random.default_rng(seed)
    chosen = rng.choice(rows.shape[0], size=count, replace=False)
    jumpers = np.stack([rows[chosen], cols[chosen]], axis=1)
    logger.debug("Added jumpers", count=count, num_nodes=num_nodes, seed=seed)

    edges = np.concatenate([mesh.edges, jumpers, jumpers[:, ::-1]], axis=0)
    return MeshGraph(mesh.positions, edges, mesh.node_type, mesh.cells)


def default_jumper_count(num_nodes: int, fraction: float = 0.05) -> int:
    """Jumper count used when a config does not set one explicitly."""
    return int(round(fraction * num_nodes))


def internal_nodes(mesh: MeshGraph) -> np.ndarray:
    """Indices of nodes labeled Normal (the MNP center pool)."""
    return np.flatnonzero(mesh.node_type == NodeType.NORMAL)


def geometric_context(mesh: MeshGraph) -> GeometricContext:
    """Centered coordinates, global mesh size ``h`` and domain diameter."""
    mean_position = mesh.positions.mean(axis=0)
    centered = mesh.positions - mean_position
    if mesh.num_edges:
        offsets = mesh.positions[mesh.receivers] - mesh.positions[mesh.senders]
        h = float(np.linalg.norm(offsets, axis=1).max())
    else:
        h = 0.0
    extent = mesh.positions.max(axis=0) - mesh.positions.min(axis=0)
    return GeometricContext(
        centered_positions=centered,
        mesh_size_h=h,
        mean_position=mean_position,
        diameter=float(np.linalg.norm(extent)),
    )


def edge_features(mesh: MeshGraph) -> np.ndarray:
    """Relative displacement ``x_r - x_s`` and its length for every edge."""
    offsets = mesh.positions[mesh.receivers] - mesh.positions[mesh.senders]
    lengths = np.linalg.norm(offsets, axis=1, keepdims=True)
    return np.concatenate([offsets, lengths], axis=1)


def node_type_one_hot(node_type: np.ndarray) -> np.ndarray:
    """One-hot encoding of node labels, one column per :class:`NodeType`."""
    one_hot = np.zeros((node_type.shape[0], NUM_NODE_TYPES), dtype=np.float64)
    one_hot[np.arange(node_type.shape[0]), node_type] = 1.0
    return one_hot
