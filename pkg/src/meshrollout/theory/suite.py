"""Pass/fail verification suite for the numerical building blocks."""

import csv
import time
from collections.abc import Callable
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Optional, Union

import numpy as np
import structlog
from opentelemetry import trace

from meshrollout.data.generator import generate_mesh
from meshrollout.mesh import geometric_context
from meshrollout.metrics import operation_timer
from meshrollout.temporal import emulation_sweep

from .h1_bound import h1_bound_check, loglog_slope, quadratic_gradient_errors
from .stability import StabilityGrid, count_violations, forward_euler_matches, identity_sweep
from .wls import WlsOperator, build_stencil, check_assumption

logger = structlog.get_logger(__name__)
tracer = trace.get_tracer(__name__)

A_STABLE_THETAS = (0.5, 0.75, 1.0)


@dataclass
class CheckResult:
    """One named check: measured value against its threshold."""

    name: str
    passed: bool
    value: float
    threshold: float
    comparison: str
    seconds: float = 0.0


@dataclass
class VerificationReport:
    checks: list[CheckResult] = field(default_factory=list)
    tables: dict[str, list[dict[str, Any]]] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed(self) -> list[str]:
        return [c.name for c in self.checks if not c.passed]

    def to_dict(self) -> dict[str, Any]:
        return {
            "passed": self.passed,
            "checks": [asdict(c) for c in self.checks],
        }


def _below(name: str, value: float, threshold: float) -> CheckResult:
    return CheckResult(name, bool(value < threshold), float(value), threshold, "<")


def _at_least(name: str, value: float, threshold: float) -> CheckResult:
    return CheckResult(name, bool(value >= threshold), float(value), threshold, ">=")


def affine_exactness(num_points: int = 300, seed: int = 0) -> float:
    """Max WLS gradient error of an affine field over a random triangulation."""
    mesh = generate_mesh(num_points, seed)
    operator = WlsOperator(mesh)
    slope = np.array([1.7, -0.4])
    values = mesh.positions @ slope + 0.3
    error = operator.gradient(values)[operator.valid_nodes] - slope
    return float(np.abs(error).max())


def assumption_sandwich(
    num_points: int = 300, seed: int = 0, vectors: int = 100
) -> tuple[float, float]:
    """Smallest ``c0_hat`` over a random triangulation and the worst sandwich slack.

    The slack is the largest violation of
    ``c0 h^2 |v|^2 <= v^T M v <= c1 h^2 |v|^2`` relative to ``|v^T M v|``
    over random ``v``; it is nonpositive up to roundoff.
    """
    mesh = generate_mesh(num_points, seed)
    rng = np.random.default_rng(seed)
    h = geometric_context(mesh).mesh_size_h
    smallest, worst = np.inf, -np.inf
    for i in range(mesh.num_nodes):
        stencil = build_stencil(mesh, i, h)
        report = check_assumption(stencil)
        smallest = min(smallest, report.c0_hat)
        v = rng.normal(size=(vectors, mesh.dim))
        quadratic = np.einsum("ka,ab,kb->k", v, stencil.moment_matrix, v)
        norms = np.sum(v**2, axis=1) * stencil.h**2
        lower = report.c0_hat * norms - quadratic
        upper = quadratic - report.c1_hat * norms
        slack = np.maximum(lower, upper) / np.maximum(np.abs(quadratic), 1e-300)
        worst = max(worst, float(slack.max()))
    return float(smallest), worst


def _timed(check: Callable[[], CheckResult]) -> CheckResult:
    start = time.perf_counter()
    result = check()
    result.seconds = time.perf_counter() - start
    logger.debug(
        "Verification check", name=result.name, passed=result.passed, value=result.value
    )
    return result


@tracer.start_as_current_span("theory.run_verification_suite")
@operation_timer("verify")
def run_verification_suite(
    seed: int = 0, grid: Optional[StabilityGrid] = None
) -> VerificationReport:
    """Run every numerical check and collect the sweep tables."""
    grid = grid or StabilityGrid.left_half_plane()
    report = VerificationReport()

    report.checks.append(
        _timed(lambda: _below("wls_affine_exactness", affine_exactness(seed=seed), 1e-10))
    )

    sizes = (0.1, 0.05, 0.025)
    errors = quadratic_gradient_errors(sizes)
    report.tables["quadratic_order"] = [
        {"h": h, "error": e} for h, e in zip(sizes, errors)
    ]
    report.checks.append(
        _timed(lambda: _at_least("wls_quadratic_order", loglog_slope(sizes, errors), 0.9))
    )

    c0_min, slack = assumption_sandwich(seed=seed)
    report.checks.append(_at_least("assumption_c0_positive", c0_min, 1e-6))
    report.checks.append(_below("assumption_sandwich_slack", slack, 1e-12))

    bound = h1_bound_check(seed=seed)
    report.tables["h1_bound"] = bound.rows()
    report.checks.extend(
        [
            _at_least("h1_consistency_slope", bound.consistency_slope, 1.8),
            _below("h1_constant_spread", bound.constant_ratio, 10.0),
            CheckResult(
                "h1_eps_doubling",
                bound.doubling_ratio <= 4.0 * (1.0 + bound.doubling_margin),
                bound.doubling_ratio,
                4.0 * (1.0 + bound.doubling_margin),
                "<=",
            ),
        ]
    )

    violations = {theta: count_violations(theta, grid) for theta in A_STABLE_THETAS}
    report.tables["a_stability"] = [
        {"theta": theta, "violations": count} for theta, count in violations.items()
    ]
    for theta, count in violations.items():
        report.checks.append(
            CheckResult(f"a_stability_theta_{theta}", count == 0, count, 0, "==")
        )
    euler = forward_euler_matches(grid)
    report.checks.append(
        CheckResult("forward_euler_region", euler, float(euler), 1.0, "==")
    )
    report.checks.append(
        _timed(lambda: _below("theta_identity_residual", identity_sweep(seed=seed), 1e-12))
    )

    emulations = emulation_sweep(seed=seed)
    report.tables["theta_emulation"] = [
        {
            "theta": r.theta,
            "z_real": r.z.real,
            "z_imag": r.z.imag,
            "relative_error": r.relative_error,
        }
        for r in emulations
    ]
    worst = max(
        (r.relative_error for r in emulations if r.feasible), default=float("inf")
    )
    report.checks.append(_below("theta_emulation_error", worst, 1e-8))

    logger.info(
        "Verification suite complete",
        passed=report.passed,
        failed=report.failed(),
        checks=len(report.checks),
    )
    return report


def write_tables(report: VerificationReport, directory: Union[str, Path]) -> list[Path]:
    """Write each sweep table to ``<directory>/<name>.csv``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for name, rows in report.tables.items():
        if not rows:
            continue
        path = directory / f"{name}.csv"
        with open(path, "w", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=list(rows[0]))
            writer.writeheader()
            writer.writerows(rows)
        written.append(path)
    return written
