"""Temporal correction: spatial predictor followed by a gated cross-attention corrector."""

from .corrector import (
    CorrectedBlock,
    CorrectionFrequency,
    GateMode,
    TemporalCorrector,
    predictor,
)
from .theta import (
    LinearSpatialBlock,
    ThetaEmulationReport,
    build_theta_block,
    complex_block,
    emulation_sweep,
    theta_amplification,
    theta_method_emulation,
)

__all__ = [
    # Models
    "GateMode",
    "CorrectionFrequency",
    "TemporalCorrector",
    "CorrectedBlock",
    "ThetaEmulationReport",
    "LinearSpatialBlock",
    # Operations
    "predictor",
    "theta_amplification",
    "complex_block",
    "build_theta_block",
    "theta_method_emulation",
    "emulation_sweep",
]
