"""Tests for the predictor-corrector blocks and theta-method emulation."""

import pytest
import torch

from meshrollout.autodiff import parameter_gradient_check
from meshrollout.layers import GraphContext, build_spatial_block
from meshrollout.temporal import (
    CorrectedBlock,
    GateMode,
    TemporalCorrector,
    emulation_sweep,
    predictor,
    theta_amplification,
    theta_method_emulation,
)


def _context(mesh):
    return GraphContext(
        centered_positions=torch.as_tensor(mesh.positions, dtype=torch.float32),
        senders=torch.as_tensor(mesh.senders),
        receivers=torch.as_tensor(mesh.receivers),
        admitted=torch.as_tensor(mesh.adjacency.to_dense(self_loops=True)),
    )


class TestCorrector:
    """Gated cross-attention corrector."""

    def test_all_branches_off_is_identity(self):
        """Without attention and mixer the corrector returns Z."""
        corrector = TemporalCorrector(8, 2, use_attention=False, use_mixer=False)
        z, z_tilde = torch.randn(5, 8), torch.randn(5, 8)
        assert torch.equal(corrector(z_tilde, z), z)

    def test_sigmoid_gate_range(self):
        """Sigmoid gates lie in [0, 1]."""
        corrector = TemporalCorrector(8, 2)
        gate = corrector.gate_values(torch.randn(6, 16) * 10)
        assert torch.all((gate >= 0.0) & (gate <= 1.0))

    def test_node_softmax_gate(self):
        """Node-softmax gates sum to one over nodes."""
        corrector = TemporalCorrector(8, 2, gate_mode=GateMode.NODE_SOFTMAX)
        gate = corrector.gate_values(torch.randn(6, 16))
        assert torch.allclose(gate.sum(dim=0), torch.ones(8))

    def test_predictor_is_residual(self, path_mesh):
        """The predictor is the block's residual update."""
        block = build_spatial_block("transformer", 8, 2)
        ctx = _context(path_mesh)
        z = torch.randn(3, 8)
        assert torch.allclose(predictor(z, block, ctx), block(z, ctx))

    def test_corrected_block_shape(self, path_mesh):
        """A corrected block keeps the latent shape."""
        step = CorrectedBlock(build_spatial_block("transformer", 8, 2), TemporalCorrector(8, 2))
        assert step(torch.randn(3, 8), _context(path_mesh)).shape == (3, 8)

    def test_gradients(self):
        """Attention, gate and mixer pass the float64 finite-difference check."""
        corrector = TemporalCorrector(4, 2).double()
        z_tilde = torch.randn(3, 4, dtype=torch.float64)
        z = torch.randn(3, 4, dtype=torch.float64)
        readout = torch.randn(3, 4, dtype=torch.float64)

        def loss():
            return (corrector(z_tilde, z) * readout).sum()

        assert parameter_gradient_check(loss, corrector) < 1e-4


class TestThetaEmulation:
    """Analytic corrector weights reproduce the theta-method."""

    def test_amplification_values(self):
        """Crank-Nicolson damps z=-2 to zero; forward Euler sits on the unit circle."""
        assert theta_amplification(0.5, -2.0) == 0.0
        assert abs(theta_amplification(0.0, -2.0)) == 1.0

    @pytest.mark.parametrize("theta", [0.0, 0.5, 1.0])
    def test_single_step(self, theta):
        """One emulated step matches R_theta(z)."""
        report = theta_method_emulation(theta, complex(-1.0, 0.5))
        assert report.feasible
        assert report.relative_error < 1e-10

    def test_sweep(self):
        """Random points of the left half-plane all pass."""
        reports = emulation_sweep(samples=10, seed=3)
        assert len(reports) == 30
        assert all(r.passed(1e-8) for r in reports)

    def test_theta_outside_gate_range(self):
        """A sigmoid gate cannot express theta > 1."""
        report = theta_method_emulation(1.5, complex(-1.0, 0.0))
        assert not report.feasible
        assert report.reason

    def test_pole(self):
        """1 - theta z = 0 is reported as infeasible."""
        assert not theta_method_emulation(1.0, complex(1.0, 0.0)).feasible
