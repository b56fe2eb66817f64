"""Tests for boundary enforcement, rollouts, RMSE metrics, probes and latent export."""

import csv

import numpy as np
import pytest
import torch

from meshrollout.data import FieldSchema, feature_width
from meshrollout.evaluation import (
    ModelStepper,
    OracleStepper,
    PersistenceStepper,
    ProbeConfig,
    Stepper,
    aggregate_seeds,
    collect_latents,
    continue_rollout,
    enforce_bc,
    enforced_entries,
    export_latents,
    latent_distance_probe,
    principal_coordinates,
    probe_targets,
    rmse_1step,
    rmse_rollout,
    rmse_rollouts,
    rollout,
    subtask_probe,
)
from meshrollout.mesh import NodeType
from meshrollout.surrogate import MeshSurrogate, prepare_graph

SCHEMA = FieldSchema.advection_diffusion()


class OffsetOracle(Stepper):
    """Ground truth shifted by a constant."""

    def __init__(self, trajectory, offset):
        self.trajectory = trajectory
        self.offset = offset

    def step(self, state, previous, t):
        return self.trajectory.states[t + 1].astype(np.float64) + self.offset


class Exploding(Stepper):
    """Multiplies the state far past the divergence limit."""

    def step(self, state, previous, t):
        return state * 1e8 + 1e8


@pytest.fixture
def untrained(small_trajectory, tiny_model_config):
    """Zero-increment surrogate and its graph on the small mesh."""
    in_features = feature_width(small_trajectory.schema, 2, False, False)
    model = MeshSurrogate(tiny_model_config, in_features, 3).eval()
    return model, prepare_graph(small_trajectory.mesh, tiny_model_config)


class TestBoundary:
    """Enforced entries per node type."""

    def test_mask_per_type(self):
        """Velocity is free on Normal and Outflow; scalar is imposed on Inflow only."""
        node_type = np.array(
            [NodeType.NORMAL, NodeType.INFLOW, NodeType.OUTFLOW, NodeType.WALL, NodeType.OBSTACLE]
        )
        mask = enforced_entries(node_type, SCHEMA)
        assert mask.tolist() == [
            [False, False, False],
            [True, True, True],
            [False, False, False],
            [False, True, True],
            [False, True, True],
        ]

    def test_idempotent(self, small_trajectory):
        """Enforcing twice changes nothing."""
        rng = np.random.default_rng(0)
        predicted = rng.normal(size=small_trajectory.states[1].shape)
        truth = small_trajectory.states[1].astype(np.float64)
        node_type = small_trajectory.mesh.node_type
        once = enforce_bc(predicted, truth, node_type, SCHEMA)
        assert np.array_equal(enforce_bc(once, truth, node_type, SCHEMA), once)

    def test_torch_input(self, small_trajectory):
        """Tensors stay tensors and agree with the numpy path."""
        predicted = np.zeros(small_trajectory.states[1].shape)
        truth = small_trajectory.states[1].astype(np.float64)
        node_type = small_trajectory.mesh.node_type
        expected = enforce_bc(predicted, truth, node_type, SCHEMA)
        actual = enforce_bc(torch.as_tensor(predicted), torch.as_tensor(truth), node_type, SCHEMA)
        assert isinstance(actual, torch.Tensor)
        assert np.array_equal(actual.numpy(), expected)


class TestRollout:
    """Autoregressive rollouts and their RMSE."""

    def test_oracle_is_exact(self, small_trajectory):
        """The ground truth scores zero."""
        result = rollout(OracleStepper(small_trajectory), small_trajectory)
        assert result.horizon == 5
        assert rmse_rollout(result) == 0.0

    def test_persistence_by_hand(self, small_trajectory):
        """Persistence RMSE matches a manual boundary-enforced loop."""
        result = rollout(PersistenceStepper(), small_trajectory)
        states = small_trajectory.states.astype(np.float64)
        node_type = small_trajectory.mesh.node_type
        current, errors = states[0], []
        for t in range(5):
            current = enforce_bc(current, states[t + 1], node_type, SCHEMA)
            errors.append(np.mean((current - states[t + 1]) ** 2))
        assert rmse_rollout(result) == pytest.approx(np.sqrt(np.mean(errors)))
        assert result.step_rmse == pytest.approx(np.sqrt(errors).tolist())

    def test_constant_offset(self, small_trajectory):
        """An offset c costs |c| on free entries and nothing on enforced ones."""
        result = rollout(OffsetOracle(small_trajectory, 0.1), small_trajectory)
        free = 1.0 - enforced_entries(small_trajectory.mesh.node_type, SCHEMA).mean()
        assert rmse_rollout(result) == pytest.approx(0.1 * np.sqrt(free))

    def test_continue_equals_direct(self, small_trajectory):
        """Extending a short rollout reproduces the long one."""
        direct = rollout(PersistenceStepper(), small_trajectory)
        partial = rollout(PersistenceStepper(), small_trajectory, horizon=2)
        extended = continue_rollout(partial, PersistenceStepper(), small_trajectory, 5)
        assert np.array_equal(extended.predicted, direct.predicted)
        assert extended.step_mse == direct.step_mse

    def test_divergence(self, small_trajectory):
        """Exploding states stop the rollout and score inf."""
        result = rollout(Exploding(), small_trajectory)
        assert result.diverged_at == 1
        assert result.horizon == 0
        assert rmse_rollout(result) == float("inf")
        assert rmse_rollouts([result]) == float("inf")

    def test_horizon_range(self, small_trajectory):
        """The horizon cannot pass the stored steps."""
        with pytest.raises(ValueError):
            rollout(PersistenceStepper(), small_trajectory, horizon=6)
        with pytest.raises(ValueError):
            continue_rollout(
                rollout(PersistenceStepper(), small_trajectory, horizon=3),
                PersistenceStepper(),
                small_trajectory,
                2,
            )

    def test_untrained_model_is_persistence(self, small_trajectory, untrained):
        """A zero-increment model rolls out exactly like persistence."""
        model, graph = untrained
        stepper = ModelStepper(model, graph, small_trajectory, keep_latents=True)
        result = rollout(stepper, small_trajectory)
        reference = rollout(PersistenceStepper(), small_trajectory)
        assert np.array_equal(result.predicted, reference.predicted)
        assert len(result.latents) == 5
        assert len(result.latents[0]) == 3

    def test_history_model_starts_after_first_step(self, small_trajectory, tiny_model_config):
        """History models read the true u_0 and u_1 and predict from step 2."""
        config = tiny_model_config.model_copy(update={"include_history": True})
        in_features = feature_width(small_trajectory.schema, 2, True, False)
        model = MeshSurrogate(config, in_features, 3).eval()
        stepper = ModelStepper(model, prepare_graph(small_trajectory.mesh, config), small_trajectory)
        states = small_trajectory.states.astype(np.float64)

        result = rollout(stepper, small_trajectory)
        assert result.start == 1
        assert np.array_equal(result.predicted[:2], states[:2])
        assert len(result.step_mse) == 4
        expected = enforce_bc(states[1], states[2], small_trajectory.mesh.node_type, SCHEMA)
        assert np.array_equal(result.predicted[2], expected)

        with pytest.raises(ValueError):
            rollout(stepper, small_trajectory, horizon=0)
        with pytest.raises(ValueError):
            stepper.step(states[0], None, 0)


class TestMetrics:
    """Aggregation of errors."""

    def test_one_step_of_untrained_model(self, small_trajectory, untrained):
        """One-step RMSE of a zero-increment model is the persistence error."""
        model, graph = untrained
        states = small_trajectory.states.astype(np.float64)
        node_type = small_trajectory.mesh.node_type
        errors = [
            np.mean((enforce_bc(states[t], states[t + 1], node_type, SCHEMA) - states[t + 1]) ** 2)
            for t in range(5)
        ]
        actual = rmse_1step(model, [small_trajectory], [graph])
        assert actual == pytest.approx(np.sqrt(np.mean(errors)), rel=1e-5)

    def test_aggregate_seeds(self):
        """Mean and population standard deviation."""
        mean, std = aggregate_seeds([1.0, 2.0, 3.0])
        assert mean == 2.0
        assert std == pytest.approx(np.sqrt(2.0 / 3.0))
        with pytest.raises(ValueError):
            aggregate_seeds([])


class TestProbes:
    """Latent distances, subtask regressions and export."""

    def test_latent_distances(self, small_trajectory, untrained):
        """One non-negative distance per layer including the encoder."""
        model, graph = untrained
        distances = latent_distance_probe(model, small_trajectory, graph, steps=[0, 1])
        assert len(distances) == 3
        assert all(d >= 0.0 for d in distances)

    def test_subtask_probe(self, small_trajectory, untrained):
        """A loss per (task, layer) on held-out nodes."""
        model, graph = untrained
        latents = collect_latents(model, small_trajectory, graph, t=1)
        targets = probe_targets(small_trajectory, 1)
        assert set(targets) == {"velocity", "pressure_proxy", "gradient_magnitude"}
        report = subtask_probe(latents, targets, ProbeConfig(hidden=8, epochs=5))
        assert len(report.rows()) == 3 * 3
        assert all(np.isfinite(row["loss"]) for row in report.rows())

    def test_probe_config(self):
        """Holdout must leave rows on both sides."""
        with pytest.raises(ValueError):
            ProbeConfig(holdout=1.0).validate()

    def test_principal_coordinates_padding(self):
        """One-dimensional latents get a zero second column."""
        coordinates = principal_coordinates(np.array([[1.0], [2.0], [4.0]]))
        assert coordinates.shape == (3, 2)
        assert np.all(coordinates[:, 1] == 0.0)
        assert np.allclose(np.abs(coordinates[:, 0]), [4.0 / 3.0, 1.0 / 3.0, 5.0 / 3.0])

    def test_export(self, tmp_path):
        """Raw arrays and a PCA table per layer and node."""
        latents = [np.random.default_rng(k).normal(size=(4, 3)) for k in range(2)]
        arrays, table = export_latents(tmp_path / "latents", latents)
        with np.load(arrays) as stored:
            assert sorted(stored.files) == ["layer_0", "layer_1"]
            assert np.array_equal(stored["layer_1"], latents[1])
        with open(table) as f:
            rows = list(csv.reader(f))
        assert rows[0] == ["layer", "node", "pc1", "pc2"]
        assert len(rows) == 1 + 2 * 4
