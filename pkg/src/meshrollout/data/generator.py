"""Triangular meshes of the unit square for the synthetic dataset."""

import math
from typing import Optional

import numpy as np
import structlog
from scipy.spatial import Delaunay, QhullError

from meshrollout.mesh import MeshGraph, NodeType

from .exceptions import MeshGenerationError

logger = structlog.get_logger(__name__)

_BOUNDARY_TOL = 1e-12
_MIN_CELL_AREA = 1e-12
_CANDIDATES_PER_POINT = 10
OBSTACLE_CENTER = (0.3, 0.5)


def label_unit_square(positions: np.ndarray) -> np.ndarray:
    """Boundary labels by side: Inflow left, Outflow right, Wall top/bottom.

    Corners belong to the walls.
    """
    x, y = positions[:, 0], positions[:, 1]
    node_type = np.full(positions.shape[0], NodeType.NORMAL, dtype=np.int64)
    node_type[x <= _BOUNDARY_TOL] = NodeType.INFLOW
    node_type[x >= 1.0 - _BOUNDARY_TOL] = NodeType.OUTFLOW
    node_type[(y <= _BOUNDARY_TOL) | (y >= 1.0 - _BOUNDARY_TOL)] = NodeType.WALL
    return node_type


def _boundary_points(per_side: int) -> np.ndarray:
    corners = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    if per_side == 0:
        return corners
    t = np.arange(1, per_side + 1) / (per_side + 1)
    zeros, ones = np.zeros_like(t), np.ones_like(t)
    sides = [
        np.stack([t, zeros], axis=1),
        np.stack([ones, t], axis=1),
        np.stack([t, ones], axis=1),
        np.stack([zeros, t], axis=1),
    ]
    return np.concatenate([corners] + sides, axis=0)


def _best_candidate_fill(
    existing: np.ndarray,
    count: int,
    rng: np.random.Generator,
    margin: float,
    keep_out: Optional[tuple[np.ndarray, float]] = None,
) -> np.ndarray:
    """Blue-noise interior points by best-candidate sampling."""
    points = np.empty((count, 2))
    pool = existing.copy()
    for k in range(count):
        candidates = rng.uniform(margin, 1.0 - margin, size=(_CANDIDATES_PER_POINT, 2))
        if keep_out is not None:
            center, radius = keep_out
            outside = np.linalg.norm(candidates - center, axis=1) > radius
            while not outside.any():
                candidates = rng.uniform(
                    margin, 1.0 - margin, size=(_CANDIDATES_PER_POINT, 2)
                )
                outside = np.linalg.norm(candidates - center, axis=1) > radius
            candidates = candidates[outside]
        distances = np.linalg.norm(candidates[:, None, :] - pool[None, :, :], axis=2)
        best = candidates[int(np.argmax(distances.min(axis=1)))]
        points[k] = best
        pool = np.concatenate([pool, best[None, :]], axis=0)
    return points


def _triangulate(points: np.ndarray) -> np.ndarray:
    try:
        triangulation = Delaunay(points)
    except (QhullError, ValueError) as e:
        raise MeshGenerationError(points.shape[0], "triangulation failed", str(e)) from e
    cells = triangulation.simplices.astype(np.int64)
    a, b, c = points[cells[:, 0]], points[cells[:, 1]], points[cells[:, 2]]
    areas = 0.5 * np.abs(
        (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])
    )
    return cells[areas > _MIN_CELL_AREA]


def generate_mesh(
    num_points: int, seed: int, obstacle_radius: Optional[float] = None
) -> MeshGraph:
    """Random Delaunay triangulation of the unit square.

    Boundary points are spaced evenly along the four sides; interior points
    are spread by best-candidate sampling. With ``obstacle_radius`` a disk
    centered at :data:`OBSTACLE_CENTER` is cut out and its rim labeled
    Obstacle; the node count is then approximate.
    """
    if num_points < 4:
        raise MeshGenerationError(num_points, "need at least the 4 corners")

    rng = np.random.default_rng(seed)
    per_side = max(0, min(int(round(math.sqrt(num_points))) - 1, (num_points - 4) // 4))
    boundary = _boundary_points(per_side)
    spacing = 1.0 / (per_side + 1)

    rim = np.empty((0, 2))
    keep_out = None
    if obstacle_radius is not None:
        if not 0.0 < obstacle_radius < 0.2:
            raise MeshGenerationError(num_points, "obstacle radius must be in (0, 0.2)")
        center = np.array(OBSTACLE_CENTER)
        rim_count = max(8, int(math.ceil(2.0 * math.pi * obstacle_radius / spacing)))
        angles = 2.0 * math.pi * np.arange(rim_count) / rim_count
        rim = center + obstacle_radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)
        keep_out = (center, obstacle_radius + 0.5 * spacing)

    interior_count = max(0, num_points - boundary.shape[0] - rim.shape[0])
    existing = np.concatenate([boundary, rim], axis=0)
    interior = _best_candidate_fill(
        existing, interior_count, rng, margin=0.25 * spacing, keep_out=keep_out
    )
    points = np.concatenate([existing, interior], axis=0)

    cells = _triangulate(points)
    node_type = label_unit_square(points)
    if rim.shape[0]:
        rim_ids = np.arange(boundary.shape[0], boundary.shape[0] + rim.shape[0])
        node_type[rim_ids] = NodeType.OBSTACLE
        centroids = points[cells].mean(axis=1)
        inside = np.linalg.norm(centroids - keep_out[0], axis=1) < obstacle_radius
        cells = cells[~inside]

    if cells.shape[0] == 0:
        raise MeshGenerationError(num_points, "no non-degenerate triangles")
    used = np.zeros(points.shape[0], dtype=bool)
    used[cells.reshape(-1)] = True
    if not used.all():
        raise MeshGenerationError(
            num_points, f"{int((~used).sum())} points are not part of any triangle"
        )

    mesh = MeshGraph.from_cells(points, cells, node_type)
    logger.debug(
        "Generated mesh",
        num_nodes=mesh.num_nodes,
        num_cells=int(cells.shape[0]),
        seed=seed,
    )
    return mesh


def generate_structured_mesh(cells_per_side: int) -> MeshGraph:
    """Regular grid of the unit square, each square split along its diagonal.

    The longest edge is the diagonal, so ``h = sqrt(2) / cells_per_side``.
    """
    if cells_per_side < 1:
        raise MeshGenerationError(0, "cells_per_side must be >= 1")
    n = cells_per_side
    coords = np.linspace(0.0, 1.0, n + 1)
    xx, yy = np.meshgrid(coords, coords, indexing="xy")
    points = np.stack([xx.reshape(-1), yy.reshape(-1)], axis=1)

    ii, jj = np.meshgrid(np.arange(n), np.arange(n), indexing="xy")
    lower_left = (jj * (n + 1) + ii).reshape(-1)
    lower_right = lower_left + 1
    upper_left = lower_left + (n + 1)
    upper_right = upper_left + 1
    cells = np.concatenate(
        [
            np.stack([lower_left, lower_right, upper_right], axis=1),
            np.stack([lower_left, upper_right, upper_left], axis=1),
        ],
        axis=0,
    )
    return MeshGraph.from_cells(points, cells, label_unit_square(points))
