"""Tests for synthetic meshes, the solver, features, noise and trajectory files."""

import math

import numpy as np
import pytest

from meshrollout.data import (
    AdvectionDiffusionSolver,
    CflViolationError,
    DataError,
    DatasetConfig,
    EndiannessError,
    HistoryUnavailableError,
    InvalidTrajectoryError,
    MeshGenerationError,
    NoiseSpec,
    SimulationParams,
    Trajectory,
    TrajectoryHeaderError,
    TruncatedPayloadError,
    add_training_noise,
    build_node_features,
    feature_width,
    generate_dataset,
    generate_mesh,
    generate_structured_mesh,
    history_feature,
    iter_states,
    label_unit_square,
    load_dataset,
    read_header,
    read_trajectory,
    save_dataset,
    simulate,
    write_trajectory,
)
from meshrollout.mesh import NodeType, geometric_context


def _velocity(points, params):
    x, y = points[:, 0], points[:, 1]
    ax, ay = params.advection
    vortex = params.vortex_strength * math.pi
    return np.stack(
        [
            ax + vortex * np.sin(math.pi * x) * np.cos(math.pi * y),
            ay - vortex * np.cos(math.pi * x) * np.sin(math.pi * y),
        ],
        axis=1,
    )


def _cross(a, b):
    return a[0] * b[1] - a[1] * b[0]


def _dense_transport(mesh, params):
    """Lumped masses, clipped cotangent weights and upwind coefficients as dense arrays.

    Dual-face fluxes are integrated with Gauss-Legendre quadrature of the
    analytic velocity instead of stream-function differences.
    """
    n = mesh.num_nodes
    mass = np.zeros(n)
    weight = np.zeros((n, n))
    flux = np.zeros((n, n))
    nodes, quadrature = np.polynomial.legendre.leggauss(6)
    nodes, quadrature = 0.5 * (nodes + 1.0), 0.5 * quadrature
    for cell in mesh.cells:
        corners = mesh.positions[cell]
        mass[cell] += 0.5 * abs(_cross(corners[1] - corners[0], corners[2] - corners[0])) / 3.0
        centroid = corners.mean(axis=0)
        for k in range(3):
            i, j = cell[(k + 1) % 3], cell[(k + 2) % 3]
            a, b = corners[(k + 1) % 3] - corners[k], corners[(k + 2) % 3] - corners[k]
            cot = 1.0 / math.tan(math.atan2(abs(_cross(a, b)), float(np.dot(a, b))))
            weight[i, j] += 0.5 * cot
            weight[j, i] += 0.5 * cot

            midpoint = 0.5 * (mesh.positions[i] + mesh.positions[j])
            segment = centroid - midpoint
            normal = np.array([segment[1], -segment[0]])
            if np.dot(normal, mesh.positions[j] - mesh.positions[i]) < 0:
                normal = -normal
            points = midpoint + nodes[:, None] * segment
            through = float(quadrature @ (_velocity(points, params) @ normal))
            flux[i, j] += through
            flux[j, i] -= through
    return mass, np.maximum(weight, 0.0), np.maximum(-flux, 0.0)


class TestMeshGeneration:
    """Random and structured triangulations of the unit square."""

    def test_exact_node_count(self, small_mesh):
        """Without an obstacle the requested node count is met."""
        assert small_mesh.num_nodes == 60
        assert small_mesh.cells is not None

    def test_same_seed_same_mesh(self):
        """Generation is a pure function of the seed."""
        first, second = generate_mesh(40, seed=5), generate_mesh(40, seed=5)
        assert np.array_equal(first.positions, second.positions)
        assert np.array_equal(first.edges, second.edges)

    def test_too_few_points(self):
        """Fewer than four points cannot cover the square."""
        with pytest.raises(MeshGenerationError):
            generate_mesh(3, seed=0)

    def test_structured_mesh_size(self):
        """The diagonal is the longest edge of a split grid."""
        mesh = generate_structured_mesh(8)
        assert mesh.num_nodes == 81
        assert geometric_context(mesh).mesh_size_h == pytest.approx(math.sqrt(2) / 8)

    def test_obstacle_rim(self):
        """An obstacle adds rim nodes labeled Obstacle."""
        mesh = generate_mesh(200, seed=0, obstacle_radius=0.1)
        assert (mesh.node_type == NodeType.OBSTACLE).sum() >= 8

    def test_side_labels(self):
        """Left is Inflow, right Outflow, top and bottom (with corners) Wall."""
        points = np.array(
            [[0.0, 0.5], [1.0, 0.5], [0.5, 0.0], [0.5, 1.0], [0.0, 0.0], [0.5, 0.5]]
        )
        assert label_unit_square(points).tolist() == [
            NodeType.INFLOW,
            NodeType.OUTFLOW,
            NodeType.WALL,
            NodeType.WALL,
            NodeType.WALL,
            NodeType.NORMAL,
        ]


class TestSolver:
    """Ground-truth advection-diffusion trajectories."""

    def test_shape_and_dtype(self, small_trajectory):
        """Six stored float32 states with scalar plus two velocities."""
        assert small_trajectory.states.shape == (6, 60, 3)
        assert small_trajectory.states.dtype == np.float32

    def test_constant_state_is_steady(self, small_mesh):
        """A constant scalar matching the inflow value never changes."""
        traj = simulate(
            small_mesh,
            steps=4,
            delta_t=0.002,
            params=SimulationParams(inflow_value=1.0),
            initial_scalar=np.ones(small_mesh.num_nodes),
        )
        assert np.allclose(traj.states[:, :, 0], 1.0, atol=1e-6)

    def test_maximum_principle(self, small_trajectory):
        """Explicit steps below the CFL limit stay within the initial range."""
        scalar = small_trajectory.states[:, :, 0]
        upper = max(scalar[0].max(), 0.0)
        assert scalar.min() >= -1e-5
        assert scalar.max() <= upper + 1e-5

    def test_inflow_is_dirichlet(self, small_trajectory):
        """Inflow nodes hold the configured value at every step."""
        inflow = small_trajectory.mesh.node_type == NodeType.INFLOW
        assert np.all(small_trajectory.states[:, inflow, 0] == 0.0)

    def test_cfl_violation(self, small_mesh):
        """An oversized step reports the limit and a safe suggestion."""
        with pytest.raises(CflViolationError) as excinfo:
            simulate(small_mesh, steps=1, delta_t=10.0)
        assert excinfo.value.suggested < excinfo.value.limit < 10.0

    def test_matches_dense_update(self):
        """Five steps on a 20-node mesh agree with a dense per-triangle update."""
        mesh = generate_mesh(20, seed=5)
        params = SimulationParams(inflow_value=0.25)
        solver = AdvectionDiffusionSolver(mesh, params)
        delta_t = 0.5 * solver.cfl_limit()
        u0 = np.random.default_rng(0).uniform(0.0, 1.0, mesh.num_nodes)

        mass, diffusion, upwind = _dense_transport(mesh, params)
        inflow = mesh.node_type == NodeType.INFLOW
        u = u0.copy()
        u[inflow] = params.inflow_value
        expected = [u]
        for n in range(5):
            scale = 1.0 + params.modulation * math.sin(2.0 * math.pi * n * delta_t / params.period)
            coupling = params.diffusivity * diffusion + scale * upwind
            u = u + delta_t * (coupling @ u - coupling.sum(axis=1) * u) / mass
            u[inflow] = params.inflow_value
            expected.append(u)

        history = solver.run(u0, 5, delta_t)
        assert np.allclose(history, np.stack(expected), rtol=0.0, atol=1e-12)
        stored = simulate(mesh, 5, delta_t, params, initial_scalar=u0).states[:, :, 0]
        assert np.allclose(stored, history, rtol=1e-6, atol=1e-6)


class TestTrajectory:
    """Trajectory invariants."""

    def test_rejects_single_step(self, small_trajectory):
        """At least two states are required."""
        with pytest.raises(InvalidTrajectoryError):
            Trajectory(
                small_trajectory.mesh,
                small_trajectory.states[:1],
                0.002,
                small_trajectory.schema,
            )

    def test_rejects_nan(self, small_trajectory):
        """Non-finite states are rejected."""
        states = small_trajectory.states.copy()
        states[1, 0, 0] = np.nan
        with pytest.raises(InvalidTrajectoryError):
            Trajectory(small_trajectory.mesh, states, 0.002, small_trajectory.schema)


class TestFeatures:
    """Node feature assembly."""

    def test_width_matches_layout(self, small_trajectory):
        """feature_width predicts the assembled column count."""
        features = build_node_features(
            small_trajectory, 2, include_history=True, include_positions=True
        )
        expected = feature_width(
            small_trajectory.schema, 2, include_history=True, include_positions=True
        )
        assert features.width == expected
        assert features.num_nodes == 60

    def test_history_at_first_step(self, small_trajectory):
        """t=0 has no previous state."""
        with pytest.raises(HistoryUnavailableError):
            build_node_features(small_trajectory, 0, include_history=True)

    def test_history_is_finite_difference(self, small_trajectory):
        """History columns hold (u_t - u_{t-1}) / delta_t."""
        states = small_trajectory.states.astype(np.float64)
        expected = (states[3] - states[2]) / small_trajectory.delta_t
        assert np.allclose(history_feature(small_trajectory, 3).values, expected)

    def test_dynamical_columns(self, small_trajectory):
        """Only the state components are eligible for noise."""
        features = build_node_features(small_trajectory, 1)
        names = [c.name for c, d in zip(features.columns, features.dynamical_mask) if d]
        assert names == small_trajectory.schema.names


class TestNoise:
    """Gaussian training noise."""

    def test_reproducible_and_targeted(self, small_trajectory):
        """Same seed gives the same draw and only noisy columns move."""
        features = build_node_features(small_trajectory, 1)
        spec = NoiseSpec(sigma={"scalar": 0.1})
        first = add_training_noise(features, spec, seed=4)
        second = add_training_noise(features, spec, seed=4)
        assert np.array_equal(first.values, second.values)
        changed = np.any(first.values != features.values, axis=0)
        assert [c.name for c, m in zip(features.columns, changed) if m] == ["scalar"]

    def test_zero_sigma_is_identity(self, small_trajectory):
        """An empty spec leaves features unchanged."""
        features = build_node_features(small_trajectory, 1)
        noisy = add_training_noise(features, NoiseSpec(), seed=0)
        assert np.array_equal(noisy.values, features.values)

    def test_negative_sigma(self):
        """Negative standard deviations are rejected."""
        with pytest.raises(ValueError):
            NoiseSpec.from_components(["scalar"], -0.1)


class TestTrajectoryFiles:
    """Binary trajectory format."""

    def test_write_read(self, small_trajectory, tmp_path):
        """A written trajectory reads back identically."""
        path = tmp_path / "traj.mrt"
        write_trajectory(path, small_trajectory)
        loaded = read_trajectory(path)
        assert np.array_equal(loaded.states, small_trajectory.states)
        assert np.array_equal(loaded.mesh.edges, small_trajectory.mesh.edges)
        assert np.array_equal(loaded.mesh.node_type, small_trajectory.mesh.node_type)
        assert loaded.delta_t == small_trajectory.delta_t
        assert loaded.schema == small_trajectory.schema

    def test_streaming(self, small_trajectory, tmp_path):
        """iter_states yields every step in order."""
        path = tmp_path / "traj.mrt"
        write_trajectory(path, small_trajectory)
        assert read_header(path).num_steps == 6
        streamed = np.stack(list(iter_states(path)))
        assert np.array_equal(streamed, small_trajectory.states)

    def test_bad_magic(self, small_trajectory, tmp_path):
        """Unknown magic bytes are a header error."""
        path = tmp_path / "traj.mrt"
        write_trajectory(path, small_trajectory)
        raw = bytearray(path.read_bytes())
        raw[:4] = b"XXXX"
        path.write_bytes(bytes(raw))
        with pytest.raises(TrajectoryHeaderError) as excinfo:
            read_trajectory(path)
        assert excinfo.value.code == "E_HEADER"

    def test_big_endian_flag(self, small_trajectory, tmp_path):
        """A non-little-endian flag has its own code."""
        path = tmp_path / "traj.mrt"
        write_trajectory(path, small_trajectory)
        raw = bytearray(path.read_bytes())
        raw[4] = 0
        path.write_bytes(bytes(raw))
        with pytest.raises(EndiannessError) as excinfo:
            read_trajectory(path)
        assert excinfo.value.code == "E_ENDIAN"

    def test_truncated(self, small_trajectory, tmp_path):
        """A short payload is detected before decoding."""
        path = tmp_path / "traj.mrt"
        write_trajectory(path, small_trajectory)
        path.write_bytes(path.read_bytes()[:-4])
        with pytest.raises(TruncatedPayloadError) as excinfo:
            read_trajectory(path)
        assert excinfo.value.expected - excinfo.value.actual == 4


class TestDataset:
    """Train/test splits."""

    @pytest.fixture
    def config(self):
        return DatasetConfig(num_nodes=30, steps=3, num_train=2, num_test=1, seed=9)

    def test_thread_count_does_not_matter(self, config):
        """Parallel generation matches serial generation."""
        serial = generate_dataset(config, threads=1)
        parallel = generate_dataset(config, threads=3)
        for a, b in zip(serial.train + serial.test, parallel.train + parallel.test):
            assert np.array_equal(a.states, b.states)

    def test_save_load(self, config, tmp_path):
        """A saved split loads with the same sizes and states."""
        split = generate_dataset(config)
        save_dataset(split, tmp_path)
        loaded = load_dataset(tmp_path)
        assert (len(loaded.train), len(loaded.test), loaded.seed) == (2, 1, 9)
        assert np.array_equal(loaded.test[0].states, split.test[0].states)

    def test_tampered_file(self, config, tmp_path):
        """A trajectory edited after saving fails its digest check."""
        save_dataset(generate_dataset(config), tmp_path)
        path = tmp_path / "train" / "traj_0000.mrt"
        raw = bytearray(path.read_bytes())
        raw[-1] ^= 0xFF
        path.write_bytes(bytes(raw))
        with pytest.raises(DataError):
            load_dataset(tmp_path)
