"""Measured constants of the discrete H1 bound for patch predictions.

Predictions are ``u + eps * xi`` for a smooth field ``u`` and a fixed noise
pattern ``xi``. The left-hand side is the mean squared error between the WLS
gradient of the predictions and the exact gradient over internal nodes; the
right-hand side basis is ``patch_error / h^2 + h^2 |u|_{C2}^2`` with
``patch_error`` the mean squared prediction error. Their ratio is the
measured constant.
"""

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np
import structlog

from meshrollout.data.generator import generate_structured_mesh
from meshrollout.mesh import MeshGraph, internal_nodes

from .wls import WlsOperator, WlsStencil, wls_gradient

logger = structlog.get_logger(__name__)

Field = Callable[[np.ndarray], np.ndarray]

SINE_C2_NORM = math.pi**2
DEFAULT_CELLS = (16, 32, 64)
DEFAULT_EPSILONS = (0.05, 0.1, 0.2)
DOUBLING_EPSILONS = (0.01, 0.02)
DOUBLING_MARGIN = 0.1


def sine_field(points: np.ndarray) -> np.ndarray:
    return np.sin(np.pi * points[:, 0]) * np.sin(np.pi * points[:, 1])


def sine_gradient(points: np.ndarray) -> np.ndarray:
    x, y = points[:, 0], points[:, 1]
    return np.pi * np.stack(
        [np.cos(np.pi * x) * np.sin(np.pi * y), np.sin(np.pi * x) * np.cos(np.pi * y)],
        axis=1,
    )


@dataclass(frozen=True)
class BoundSample:
    """One ``(h, eps)`` measurement."""

    h: float
    eps: float
    lhs: float
    patch_error: float
    rhs: float
    constant: float


class PatchPerturbation:
    """Gradient errors of ``u + eps * xi`` on one mesh, for any ``eps``.

    The noise pattern is oriented so that its gradient error is nonnegatively
    correlated with the consistency error of ``u``; the left-hand side is
    then nondecreasing in ``eps`` and at most quadruples when ``eps`` doubles.
    """

    def __init__(
        self,
        mesh: MeshGraph,
        u: Field = sine_field,
        grad_u: Field = sine_gradient,
        seed: int = 0,
    ):
        self.mesh = mesh
        self.operator = WlsOperator(mesh)
        self.h = self.operator.h
        interior = internal_nodes(mesh)
        self.nodes = interior[self.operator.valid_nodes[interior]]

        truth = u(mesh.positions)
        self.consistency = (
            self.operator.gradient(truth)[self.nodes] - grad_u(mesh.positions)[self.nodes]
        )
        xi = np.random.default_rng(seed).uniform(-1.0, 1.0, mesh.num_nodes)
        noise_gradient = self.operator.gradient(xi)[self.nodes]
        if np.sum(self.consistency * noise_gradient) < 0:
            xi, noise_gradient = -xi, -noise_gradient
        self.xi = xi
        self.noise_gradient = noise_gradient

    def lhs(self, eps: float) -> float:
        error = self.consistency + eps * self.noise_gradient
        return float(np.mean(np.sum(error**2, axis=1)))

    def patch_error(self, eps: float) -> float:
        return float(eps**2 * np.mean(self.xi**2))

    def sample(self, eps: float, c2_norm: float = SINE_C2_NORM) -> BoundSample:
        lhs = self.lhs(eps)
        patch_error = self.patch_error(eps)
        rhs = patch_error / self.h**2 + self.h**2 * c2_norm**2
        return BoundSample(self.h, eps, lhs, patch_error, rhs, lhs / rhs)


def loglog_slope(x: Sequence[float], y: Sequence[float]) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    slope, _ = np.polyfit(np.log(np.asarray(x)), np.log(np.asarray(y)), 1)
    return float(slope)


@dataclass
class H1BoundReport:
    samples: list[BoundSample] = field(default_factory=list)
    consistency: list[BoundSample] = field(default_factory=list)
    consistency_slope: float = 0.0
    constant_ratio: float = 0.0
    doubling_ratio: float = 0.0
    doubling_margin: float = DOUBLING_MARGIN

    @property
    def passed(self) -> bool:
        return (
            self.consistency_slope >= 1.8
            and self.constant_ratio < 10.0
            and self.doubling_ratio <= 4.0 * (1.0 + self.doubling_margin)
        )

    def rows(self) -> list[dict]:
        return [
            {"kind": kind, **s.__dict__}
            for kind, group in (("sweep", self.samples), ("consistency", self.consistency))
            for s in group
        ]


def h1_bound_check(
    cells: Sequence[int] = DEFAULT_CELLS,
    epsilons: Sequence[float] = DEFAULT_EPSILONS,
    doubling: Sequence[float] = DOUBLING_EPSILONS,
    seed: int = 0,
) -> H1BoundReport:
    """Sweep ``(eps, h)`` on structured meshes of the unit square.

    Reports the slope of the ``eps = 0`` error in ``h``, the spread
    (max / min) of the measured constant over the sweep and the growth of
    the error when ``eps`` doubles on the middle mesh.
    """
    report = H1BoundReport()
    perturbations = [
        PatchPerturbation(generate_structured_mesh(n), seed=seed) for n in cells
    ]
    for p in perturbations:
        report.consistency.append(p.sample(0.0))
        report.samples.extend(p.sample(eps) for eps in epsilons)

    report.consistency_slope = loglog_slope(
        [s.h for s in report.consistency], [s.lhs for s in report.consistency]
    )
    constants = [s.constant for s in report.samples]
    report.constant_ratio = float(max(constants) / min(constants))
    middle = perturbations[len(perturbations) // 2]
    low, high = doubling
    report.doubling_ratio = middle.lhs(high) / middle.lhs(low)
    logger.info(
        "H1 bound sweep complete",
        consistency_slope=report.consistency_slope,
        constant_ratio=report.constant_ratio,
        doubling_ratio=report.doubling_ratio,
    )
    return report


ASYMMETRIC_STENCIL = np.array([[1.0, 0.0], [0.0, 1.0], [-0.5, 0.3], [0.2, -0.8]])


def quadratic_gradient_errors(
    mesh_sizes: Sequence[float] = (0.1, 0.05, 0.025),
    center: tuple[float, float] = (0.3, 0.2),
) -> list[float]:
    """WLS gradient error of ``x^2 + 3xy - y^2`` on an h-scaled asymmetric stencil."""
    center = np.asarray(center)

    def u(p: np.ndarray) -> np.ndarray:
        return p[:, 0] ** 2 + 3.0 * p[:, 0] * p[:, 1] - p[:, 1] ** 2

    exact = np.array([2.0 * center[0] + 3.0 * center[1], 3.0 * center[0] - 2.0 * center[1]])
    errors = []
    for h in mesh_sizes:
        offsets = h * ASYMMETRIC_STENCIL
        stencil = WlsStencil.from_offsets(offsets, h)
        differences = u(center + offsets) - u(center[None, :])[0]
        errors.append(float(np.linalg.norm(wls_gradient(differences, stencil) - exact)))
    return errors
