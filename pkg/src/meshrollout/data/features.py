"""Assembly of per-node input features from trajectory states."""

from typing import Optional

import numpy as np

from meshrollout.mesh import MeshGraph, NodeType, node_type_one_hot

from .exceptions import HistoryUnavailableError
from .models import (
    ColumnRole,
    FeatureColumn,
    FieldKind,
    FieldSchema,
    NodeFeatures,
    Trajectory,
)

_AXES = ("x", "y", "z")


def inflow_speed(mesh: MeshGraph, schema: FieldSchema, state: np.ndarray) -> float:
    """Mean velocity magnitude over Inflow nodes (0 when there are none)."""
    inflow = mesh.node_type == NodeType.INFLOW
    velocity = schema.indices_of(FieldKind.VELOCITY)
    if not inflow.any() or velocity.size == 0:
        return 0.0
    speeds = np.linalg.norm(state[inflow][:, velocity], axis=1)
    return float(speeds.mean())


def _node_type_block(mesh: MeshGraph) -> NodeFeatures:
    columns = tuple(
        FeatureColumn(f"type_{t.name.lower()}", ColumnRole.NODE_TYPE) for t in NodeType
    )
    return NodeFeatures(node_type_one_hot(mesh.node_type), columns)


def _field_block(schema: FieldSchema, state: np.ndarray) -> NodeFeatures:
    columns = tuple(
        FeatureColumn(f.name, ColumnRole.FIELD, dynamical=f.dynamical, component=f.name)
        for f in schema.fields
    )
    return NodeFeatures(np.asarray(state, dtype=np.float64), columns)


def _history_block(
    schema: FieldSchema, state: np.ndarray, previous: np.ndarray, delta_t: float
) -> NodeFeatures:
    dynamical = np.flatnonzero(schema.dynamical_mask)
    rate = (
        np.asarray(state, dtype=np.float64)[:, dynamical]
        - np.asarray(previous, dtype=np.float64)[:, dynamical]
    ) / delta_t
    columns = tuple(
        FeatureColumn(f"d_{schema.fields[k].name}_dt", ColumnRole.HISTORY)
        for k in dynamical
    )
    return NodeFeatures(rate, columns)


def assemble_features(
    mesh: MeshGraph,
    schema: FieldSchema,
    state: np.ndarray,
    delta_t: float,
    previous_state: Optional[np.ndarray] = None,
    include_positions: bool = False,
) -> NodeFeatures:
    """Build the input layout for a single state.

    Columns are the node-type one-hot block, the state components, the inflow
    scalar, the history derivative when ``previous_state`` is given and the
    absolute coordinates when ``include_positions`` is set. Only state
    components marked dynamical are eligible for training noise.
    """
    features = _node_type_block(mesh).append(_field_block(schema, state))
    inflow = np.full((mesh.num_nodes, 1), inflow_speed(mesh, schema, state))
    features = features.append(
        NodeFeatures(inflow, (FeatureColumn("inflow_speed", ColumnRole.INFLOW),))
    )
    if previous_state is not None:
        features = features.append(
            _history_block(schema, state, previous_state, delta_t)
        )
    if include_positions:
        columns = tuple(
            FeatureColumn(f"position_{_AXES[a]}", ColumnRole.POSITION)
            for a in range(mesh.dim)
        )
        features = features.append(NodeFeatures(mesh.positions, columns))
    return features


def history_feature(traj: Trajectory, t: int) -> NodeFeatures:
    """``(u_t - u_{t-1}) / delta_t`` for every dynamical component."""
    if not 1 <= t < traj.num_steps:
        raise HistoryUnavailableError(t, traj.num_steps)
    return _history_block(
        traj.schema, traj.states[t], traj.states[t - 1], traj.delta_t
    )


def build_node_features(
    traj: Trajectory,
    t: int,
    include_history: bool = False,
    include_positions: bool = False,
) -> NodeFeatures:
    """Input features of step ``t`` of a trajectory."""
    if not 0 <= t < traj.num_steps:
        raise IndexError(f"step {t} outside trajectory of {traj.num_steps} steps")
    previous = None
    if include_history:
        if t == 0:
            raise HistoryUnavailableError(t, traj.num_steps)
        previous = traj.states[t - 1]
    return assemble_features(
        traj.mesh,
        traj.schema,
        traj.states[t],
        traj.delta_t,
        previous_state=previous,
        include_positions=include_positions,
    )


def feature_width(
    schema: FieldSchema, dim: int, include_history: bool, include_positions: bool
) -> int:
    """Number of columns :func:`assemble_features` produces."""
    width = len(NodeType) + schema.num_components + 1
    if include_history:
        width += int(schema.dynamical_mask.sum())
    if include_positions:
        width += dim
    return width
