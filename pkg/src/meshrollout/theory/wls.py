"""Weighted least-squares gradients on one-hop stencils.

For node ``i`` with offsets ``B_i`` (rows ``x_j - x_i``), diagonal weights
``W_i`` summing to one and differences ``d_i(v)`` (entries ``v_j - v_i``)
the discrete gradient is ``(B^T W B)^{-1} B^T W d_i(v)``.
"""

from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Optional, Union

import numpy as np
import scipy.sparse as sp
import structlog
import torch

from meshrollout.mesh import MeshGraph, geometric_context

from .exceptions import DegenerateStencilError

logger = structlog.get_logger(__name__)

DEGENERACY_TOLERANCE = 1e-12


class WeightScheme(str, Enum):
    UNIFORM = "uniform"
    INVERSE_DISTANCE = "inverse_distance"


def stencil_weights(
    offsets: np.ndarray, scheme: Union[WeightScheme, str] = WeightScheme.UNIFORM
) -> np.ndarray:
    """Nonnegative weights normalized to unit sum."""
    count = offsets.shape[0]
    if count == 0:
        return np.empty(0)
    if WeightScheme(scheme) == WeightScheme.INVERSE_DISTANCE:
        raw = 1.0 / np.maximum(np.linalg.norm(offsets, axis=1), 1e-300)
    else:
        raw = np.ones(count)
    return raw / raw.sum()


@dataclass(frozen=True, eq=False)
class WlsStencil:
    """Offsets, weights and mesh size of one node's stencil."""

    offsets: np.ndarray
    weights: np.ndarray
    h: float
    node: Optional[int] = None

    @classmethod
    def from_offsets(
        cls,
        offsets: np.ndarray,
        h: Optional[float] = None,
        scheme: Union[WeightScheme, str] = WeightScheme.UNIFORM,
        node: Optional[int] = None,
    ) -> "WlsStencil":
        offsets = np.atleast_2d(np.asarray(offsets, dtype=np.float64))
        if h is None:
            h = float(np.linalg.norm(offsets, axis=1).max()) if offsets.size else 0.0
        return cls(offsets, stencil_weights(offsets, scheme), float(h), node)

    @property
    def dim(self) -> int:
        return int(self.offsets.shape[1])

    @cached_property
    def moment_matrix(self) -> np.ndarray:
        """``B^T W B`` (symmetric positive semidefinite)."""
        return self.offsets.T @ (self.weights[:, None] * self.offsets)

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        """Eigenvalues of the moment matrix, ascending."""
        return np.linalg.eigvalsh(self.moment_matrix)

    @property
    def tolerance(self) -> float:
        return DEGENERACY_TOLERANCE * self.h**2

    @property
    def degenerate(self) -> bool:
        return bool(self.offsets.shape[0] == 0 or self.eigenvalues[0] <= self.tolerance)

    def solve_matrix(self) -> np.ndarray:
        """``dim x k`` matrix ``(B^T W B)^{-1} B^T W``."""
        if self.degenerate:
            smallest = float(self.eigenvalues[0]) if self.offsets.shape[0] else 0.0
            raise DegenerateStencilError(self.node, smallest, self.tolerance)
        return np.linalg.solve(self.moment_matrix, self.offsets.T * self.weights[None, :])


def build_stencil(
    mesh: MeshGraph,
    i: int,
    h: Optional[float] = None,
    scheme: Union[WeightScheme, str] = WeightScheme.UNIFORM,
) -> WlsStencil:
    """Stencil of node ``i`` over its one-hop neighbors."""
    neighbors = mesh.adjacency.row(i)
    offsets = mesh.positions[neighbors] - mesh.positions[i]
    if h is None:
        h = geometric_context(mesh).mesh_size_h
    return WlsStencil.from_offsets(offsets, h, scheme, node=i)


def wls_gradient(differences: np.ndarray, stencil: WlsStencil) -> np.ndarray:
    """Gradient from differences ``v_j - v_i`` (``k`` or ``k x c``)."""
    return stencil.solve_matrix() @ np.asarray(differences, dtype=np.float64)


@dataclass(frozen=True)
class AssumptionReport:
    """Spectral bounds ``c0 h^2 I <= B^T W B <= c1 h^2 I`` of one stencil."""

    c0_hat: float
    c1_hat: float
    satisfied: bool


def check_assumption(stencil: WlsStencil) -> AssumptionReport:
    if stencil.offsets.shape[0] == 0 or stencil.h <= 0:
        return AssumptionReport(0.0, 0.0, False)
    low, high = stencil.eigenvalues[0], stencil.eigenvalues[-1]
    scale = stencil.h**2
    return AssumptionReport(
        c0_hat=float(low / scale),
        c1_hat=float(high / scale),
        satisfied=bool(low > stencil.tolerance),
    )


class WlsOperator:
    """Mesh-wide WLS gradient as one sparse matrix per axis.

    Row ``i`` of ``matrices[a]`` maps nodal values to the ``a``-th gradient
    component at node ``i``. Nodes with degenerate stencils get empty rows
    and are listed in ``degenerate_nodes``.
    """

    def __init__(
        self,
        mesh: MeshGraph,
        scheme: Union[WeightScheme, str] = WeightScheme.UNIFORM,
        h: Optional[float] = None,
    ):
        self.mesh = mesh
        self.h = geometric_context(mesh).mesh_size_h if h is None else h
        dim, num_nodes = mesh.dim, mesh.num_nodes
        rows, cols, values = [], [], [[] for _ in range(dim)]
        degenerate = []
        for i in range(num_nodes):
            stencil = build_stencil(mesh, i, self.h, scheme)
            if stencil.degenerate:
                degenerate.append(i)
                continue
            solve = stencil.solve_matrix()
            neighbors = mesh.adjacency.row(i)
            rows.extend([i] * (neighbors.shape[0] + 1))
            cols.extend(neighbors.tolist() + [i])
            for a in range(dim):
                values[a].extend(solve[a].tolist() + [-float(solve[a].sum())])
        self.degenerate_nodes = np.asarray(degenerate, dtype=np.int64)
        self.matrices = [
            sp.csr_matrix((values[a], (rows, cols)), shape=(num_nodes, num_nodes))
            for a in range(dim)
        ]
        if degenerate:
            logger.warning(
                "Skipped degenerate WLS stencils",
                count=len(degenerate),
                num_nodes=num_nodes,
            )
        self._torch_cache: dict[torch.dtype, list[torch.Tensor]] = {}

    @property
    def valid_nodes(self) -> np.ndarray:
        mask = np.ones(self.mesh.num_nodes, dtype=bool)
        mask[self.degenerate_nodes] = False
        return mask

    def gradient(self, values: np.ndarray) -> np.ndarray:
        """``N x dim`` for scalar values, ``N x c x dim`` for ``N x c``."""
        values = np.asarray(values, dtype=np.float64)
        return np.stack([m @ values for m in self.matrices], axis=-1)

    def divergence(self, vector: np.ndarray) -> np.ndarray:
        """Sum of ``d v_a / d x_a`` for an ``N x dim`` field."""
        return sum(m @ vector[:, a] for a, m in enumerate(self.matrices))

    def torch_matrices(self, dtype: torch.dtype) -> list[torch.Tensor]:
        if dtype not in self._torch_cache:
            tensors = []
            for m in self.matrices:
                coo = m.tocoo()
                index = torch.as_tensor(np.vstack([coo.row, coo.col]), dtype=torch.long)
                tensors.append(
                    torch.sparse_coo_tensor(
                        index, torch.as_tensor(coo.data, dtype=dtype), m.shape
                    ).coalesce()
                )
            self._torch_cache[dtype] = tensors
        return self._torch_cache[dtype]

    def gradient_torch(self, values: torch.Tensor) -> torch.Tensor:
        """Differentiable gradient of ``N x c`` values, returned as ``N x c x dim``."""
        matrices = self.torch_matrices(values.dtype)
        return torch.stack([torch.sparse.mm(m, values) for m in matrices], dim=-1)

    def divergence_torch(self, vector: torch.Tensor) -> torch.Tensor:
        matrices = self.torch_matrices(vector.dtype)
        parts = [
            torch.sparse.mm(m, vector[:, a : a + 1]).squeeze(-1)
            for a, m in enumerate(matrices)
        ]
        return torch.stack(parts, dim=0).sum(dim=0)
