"""Synthetic advection-diffusion trajectories, input features and file I/O.

Usage:
    from meshrollout.data import DatasetConfig, generate_dataset, save_dataset

    split = generate_dataset(DatasetConfig(num_nodes=300, num_train=4, num_test=1))
    save_dataset(split, "runs/data")
"""

from .config import DatasetConfig
from .dataset import (
    generate_dataset,
    generate_trajectory,
    load_dataset,
    save_dataset,
    trajectory_seeds,
)
from .exceptions import (
    CflViolationError,
    DataError,
    EndiannessError,
    HistoryUnavailableError,
    InvalidTrajectoryError,
    MeshGenerationError,
    SchemaMismatchError,
    TrajectoryFileError,
    TrajectoryHeaderError,
    TruncatedPayloadError,
)
from .features import (
    assemble_features,
    build_node_features,
    feature_width,
    history_feature,
    inflow_speed,
)
from .generator import generate_mesh, generate_structured_mesh, label_unit_square
from .io import TrajectoryHeader, iter_states, read_header, read_trajectory, write_trajectory
from .models import (
    ColumnRole,
    DatasetSplit,
    FeatureColumn,
    FieldKind,
    FieldSchema,
    FieldSpec,
    NodeFeatures,
    NoiseSpec,
    SimulationParams,
    Trajectory,
)
from .noise import add_training_noise, noise_vector
from .solver import AdvectionDiffusionSolver, TransportOperator, simulate

__all__ = [
    # Models
    "FieldKind",
    "FieldSpec",
    "FieldSchema",
    "Trajectory",
    "ColumnRole",
    "FeatureColumn",
    "NodeFeatures",
    "NoiseSpec",
    "DatasetSplit",
    "SimulationParams",
    "DatasetConfig",
    "TrajectoryHeader",
    # Mesh generation and simulation
    "generate_mesh",
    "generate_structured_mesh",
    "label_unit_square",
    "AdvectionDiffusionSolver",
    "TransportOperator",
    "simulate",
    # Features and noise
    "assemble_features",
    "build_node_features",
    "history_feature",
    "inflow_speed",
    "feature_width",
    "add_training_noise",
    "noise_vector",
    # Files and datasets
    "write_trajectory",
    "read_trajectory",
    "read_header",
    "iter_states",
    "generate_dataset",
    "generate_trajectory",
    "save_dataset",
    "load_dataset",
    "trajectory_seeds",
    # Exceptions
    "DataError",
    "MeshGenerationError",
    "CflViolationError",
    "InvalidTrajectoryError",
    "HistoryUnavailableError",
    "TrajectoryFileError",
    "TrajectoryHeaderError",
    "EndiannessError",
    "TruncatedPayloadError",
    "SchemaMismatchError",
]
