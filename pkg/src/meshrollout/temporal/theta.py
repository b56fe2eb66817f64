"""Analytic configuration of a corrector that reproduces the theta-method.

A complex state ``y = a + ib`` on a single node is encoded as the real
latent ``[a, b]``, and multiplication by a complex ``w`` as the 2x2 block
``[[Re w, -Im w], [Im w, Re w]]``. With the predictor ``Z~ = (1 + z) Z``,
mixer ``(1 - theta)(Z~ - Z)``, constant gate ``theta`` and cross-attention
values ``z R Z``, one predictor-corrector step maps ``y`` to
``(1 + (1 - theta) z + theta z R) y``, which equals ``R y`` exactly when
``R = R_theta(z) = (1 + (1 - theta) z) / (1 - theta z)``.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import structlog
import torch
from torch import nn

from meshrollout.layers import Activation, GraphContext, SpatialBlock

from .corrector import CorrectedBlock, TemporalCorrector

logger = structlog.get_logger(__name__)


def complex_block(w: complex) -> torch.Tensor:
    """Real 2x2 matrix of multiplication by ``w``."""
    return torch.tensor(
        [[w.real, -w.imag], [w.imag, w.real]], dtype=torch.float64
    )


def theta_amplification(theta: float, z: complex) -> complex:
    return (1.0 + (1.0 - theta) * z) / (1.0 - theta * z)


class LinearSpatialBlock(SpatialBlock):
    """Spatial block whose increment is a fixed linear map."""

    def __init__(self, matrix: torch.Tensor):
        super().__init__()
        self.linear = nn.Linear(matrix.shape[1], matrix.shape[0], bias=False)
        with torch.no_grad():
            self.linear.weight.copy_(matrix)

    def delta(self, z: torch.Tensor, ctx: GraphContext) -> torch.Tensor:
        return self.linear(z)


@dataclass
class ThetaEmulationReport:
    """Measured versus target amplification of one emulated step."""

    theta: float
    z: complex
    feasible: bool
    target: Optional[complex] = None
    measured: Optional[complex] = None
    relative_error: Optional[float] = None
    reason: Optional[str] = None

    def passed(self, tolerance: float) -> bool:
        return self.feasible and self.relative_error is not None and (
            self.relative_error <= tolerance
        )


def _gate_logit(theta: float) -> float:
    if theta <= 0.0:
        return -math.inf
    if theta >= 1.0:
        return math.inf
    return math.log(theta / (1.0 - theta))


def build_theta_block(theta: float, z: complex) -> CorrectedBlock:
    """Predictor-corrector block with weights set for ``R_theta(z)``."""
    target = theta_amplification(theta, z)
    eye = torch.eye(2, dtype=torch.float64)
    block = LinearSpatialBlock(complex_block(z)).double()
    corrector = TemporalCorrector(
        width=2, heads=1, mixer_activation=Activation.IDENTITY
    ).double()
    with torch.no_grad():
        attention = corrector.cross_attention
        attention.query.weight.zero_()
        attention.key.weight.zero_()
        attention.value.weight.copy_(complex_block(z * target))
        attention.output.weight.copy_(eye)

        corrector.gate.input_layer.weight.zero_()
        corrector.gate.input_layer.bias.zero_()
        corrector.gate.output_layer.weight.zero_()
        corrector.gate.output_layer.bias.fill_(_gate_logit(theta))

        corrector.mixer.input_layer.weight.copy_(torch.cat([eye, -eye], dim=1))
        corrector.mixer.input_layer.bias.zero_()
        corrector.mixer.output_layer.weight.copy_((1.0 - theta) * eye)
        corrector.mixer.output_layer.bias.zero_()
    return CorrectedBlock(block, corrector)


def _single_node_context() -> GraphContext:
    empty = torch.empty(0, dtype=torch.long)
    return GraphContext(
        centered_positions=torch.zeros(1, 2, dtype=torch.float64),
        senders=empty,
        receivers=empty,
        admitted=torch.ones(1, 1, dtype=torch.bool),
    )


def theta_method_emulation(
    theta: float, z: complex, y0: complex = 1.0 + 0.5j
) -> ThetaEmulationReport:
    """Run one emulated step on ``y0`` and compare ``y1 / y0`` with ``R_theta(z)``.

    Infeasible requests (``theta`` outside ``[0, 1]``, which a sigmoid gate
    cannot express, or a pole ``1 - theta z = 0``) are reported, not raised.
    """
    z = complex(z)
    if not 0.0 <= theta <= 1.0:
        return ThetaEmulationReport(
            theta, z, feasible=False, reason="gate cannot represent theta outside [0, 1]"
        )
    if 1.0 - theta * z == 0:
        return ThetaEmulationReport(
            theta, z, feasible=False, reason="1 - theta z = 0 (pole of R_theta)"
        )
    if y0 == 0:
        raise ValueError("y0 must be nonzero")

    target = theta_amplification(theta, z)
    step = build_theta_block(theta, z)
    state = torch.tensor([[y0.real, y0.imag]], dtype=torch.float64)
    with torch.no_grad():
        out = step(state, _single_node_context())
    y1 = complex(float(out[0, 0]), float(out[0, 1]))
    measured = y1 / y0
    error = abs(measured - target) / max(1.0, abs(target))
    return ThetaEmulationReport(
        theta, z, feasible=True, target=target, measured=measured, relative_error=error
    )


def emulation_sweep(
    thetas: tuple[float, ...] = (0.0, 0.5, 1.0), samples: int = 50, seed: int = 0
) -> list[ThetaEmulationReport]:
    """Emulate each ``theta`` at ``samples`` random ``z`` in the left half-plane."""
    rng = np.random.default_rng(seed)
    reports = []
    for theta in thetas:
        points = -rng.uniform(0.0, 4.0, samples) + 1j * rng.uniform(-4.0, 4.0, samples)
        reports.extend(theta_method_emulation(theta, complex(p)) for p in points)
    logger.debug("Theta emulation sweep", thetas=list(thetas), samples=samples)
    return reports
