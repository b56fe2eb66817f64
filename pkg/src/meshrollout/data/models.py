"""Data models for trajectories, node features and noise."""

from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from meshrollout.mesh import MeshGraph

from .exceptions import InvalidTrajectoryError


class FieldKind(str, Enum):
    """Physical role of a state component, used for boundary enforcement."""

    VELOCITY = "velocity"
    SCALAR = "scalar"


@dataclass(frozen=True)
class FieldSpec:
    """One named state component."""

    name: str
    kind: FieldKind
    dynamical: bool = True


@dataclass(frozen=True)
class FieldSchema:
    """Ordered description of the ``c`` components stored per node."""

    fields: tuple[FieldSpec, ...]

    @classmethod
    def advection_diffusion(cls) -> "FieldSchema":
        """Transported scalar plus the two advecting velocity components."""
        return cls(
            fields=(
                FieldSpec("scalar", FieldKind.SCALAR),
                FieldSpec("velocity_x", FieldKind.VELOCITY),
                FieldSpec("velocity_y", FieldKind.VELOCITY),
            )
        )

    @property
    def num_components(self) -> int:
        return len(self.fields)

    @property
    def names(self) -> list[str]:
        return [f.name for f in self.fields]

    @property
    def dynamical_mask(self) -> np.ndarray:
        return np.array([f.dynamical for f in self.fields], dtype=bool)

    def indices_of(self, kind: FieldKind) -> np.ndarray:
        return np.array(
            [k for k, f in enumerate(self.fields) if f.kind == kind], dtype=np.int64
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "fields": [
                {"name": f.name, "kind": f.kind.value, "dynamical": f.dynamical}
                for f in self.fields
            ]
        }

    @classmethod
    def from_dict(cls, payload: Mapping[str, Any]) -> "FieldSchema":
        return cls(
            fields=tuple(
                FieldSpec(item["name"], FieldKind(item["kind"]), bool(item["dynamical"]))
                for item in payload["fields"]
            )
        )


@dataclass(eq=False)
class Trajectory:
    """Time-indexed per-node states on a fixed mesh.

    ``states`` has shape ``T x N x c`` and is stored as float32.
    """

    mesh: MeshGraph
    states: np.ndarray
    delta_t: float
    schema: FieldSchema

    def __post_init__(self) -> None:
        self.states = np.ascontiguousarray(self.states, dtype=np.float32)
        if self.states.ndim != 3:
            raise InvalidTrajectoryError(f"states must be T x N x c, got {self.states.shape}")
        num_steps, num_nodes, num_components = self.states.shape
        if num_steps < 2:
            raise InvalidTrajectoryError(f"need at least 2 steps, got {num_steps}")
        if num_nodes != self.mesh.num_nodes:
            raise InvalidTrajectoryError(
                f"states have {num_nodes} nodes, mesh has {self.mesh.num_nodes}"
            )
        if num_components != self.schema.num_components:
            raise InvalidTrajectoryError(
                f"schema lists {self.schema.num_components} components, "
                f"states carry {num_components}"
            )
        if not np.all(np.isfinite(self.states)):
            raise InvalidTrajectoryError("states contain NaN or Inf")
        if not self.delta_t > 0:
            raise InvalidTrajectoryError(f"delta_t must be positive, got {self.delta_t}")

    @property
    def num_steps(self) -> int:
        return int(self.states.shape[0])

    @property
    def num_components(self) -> int:
        return int(self.states.shape[2])


class ColumnRole(str, Enum):
    """Origin of a node-feature column."""

    NODE_TYPE = "node_type"
    FIELD = "field"
    INFLOW = "inflow"
    HISTORY = "history"
    POSITION = "position"


@dataclass(frozen=True)
class FeatureColumn:
    name: str
    role: ColumnRole
    dynamical: bool = False
    component: Optional[str] = None


@dataclass(eq=False)
class NodeFeatures:
    """``N x p`` input attributes together with a per-column description."""

    values: np.ndarray
    columns: tuple[FeatureColumn, ...]

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2 or self.values.shape[1] != len(self.columns):
            raise ValueError(
                f"feature matrix {self.values.shape} does not match "
                f"{len(self.columns)} columns"
            )

    @property
    def width(self) -> int:
        return len(self.columns)

    @property
    def num_nodes(self) -> int:
        return int(self.values.shape[0])

    @property
    def dynamical_mask(self) -> np.ndarray:
        return np.array([c.dynamical for c in self.columns], dtype=bool)

    def column_indices(self, role: ColumnRole) -> np.ndarray:
        return np.array(
            [k for k, c in enumerate(self.columns) if c.role == role], dtype=np.int64
        )

    def append(self, other: "NodeFeatures") -> "NodeFeatures":
        """Concatenate the columns of ``other`` after this block."""
        if other.num_nodes != self.num_nodes:
            raise ValueError(
                f"cannot append features for {other.num_nodes} nodes to {self.num_nodes}"
            )
        return NodeFeatures(
            values=np.concatenate([self.values, other.values], axis=1),
            columns=self.columns + other.columns,
        )


@dataclass
class NoiseSpec:
    """Per-component Gaussian noise standard deviations.

    Components missing from ``sigma`` receive no noise.
    """

    sigma: dict[str, float] = field(default_factory=dict)

    def validate(self) -> None:
        for name, value in self.sigma.items():
            if value < 0:
                raise ValueError(f"noise sigma for '{name}' must be >= 0, got {value}")

    def sigma_for(self, component: Optional[str]) -> float:
        if component is None:
            return 0.0
        return float(self.sigma.get(component, 0.0))

    @classmethod
    def from_components(cls, names: Sequence[str], sigma: float) -> "NoiseSpec":
        spec = cls(sigma={name: float(sigma) for name in names})
        spec.validate()
        return spec

    @classmethod
    def cylinder_like(cls) -> "NoiseSpec":
        """Velocity noise of the 2D cylinder-flow reference dataset."""
        return cls(sigma={"velocity_x": 0.02, "velocity_y": 0.02})

    @classmethod
    def plate_like(cls) -> "NoiseSpec":
        """Displacement-scale noise of the deforming-plate reference dataset."""
        return cls(sigma={"velocity_x": 0.003, "velocity_y": 0.003})

    @classmethod
    def aneurysm_like(cls) -> "NoiseSpec":
        """Anisotropic velocity noise of the 3D aneurysm reference dataset."""
        return cls(sigma={"velocity_x": 10.0, "velocity_y": 10.0, "velocity_z": 1.0})


@dataclass
class DatasetSplit:
    """Train and test trajectories generated from one root seed."""

    train: list[Trajectory]
    test: list[Trajectory]
    seed: int

    def __post_init__(self) -> None:
        train_ids = {id(t) for t in self.train}
        if any(id(t) in train_ids for t in self.test):
            raise ValueError("train and test splits share trajectories")


class SimulationParams(BaseModel):
    """Physical parameters of the synthetic advection-diffusion solver.

    The advecting velocity is ``s(t) * v0(x)`` with ``v0`` derived from the
    stream function ``a_x y - a_y x + vortex * sin(pi x) sin(pi y)`` and
    ``s(t) = 1 + modulation * sin(2 pi t / period)``.
    """

    model_config = ConfigDict(extra="forbid")

    advection: tuple[float, float] = Field(
        default=(1.0, 0.0), description="Uniform background velocity (m/s)"
    )
    vortex_strength: float = Field(
        default=0.3, description="Amplitude of the divergence-free vortex term"
    )
    diffusivity: float = Field(default=1e-3, ge=0.0, description="Diffusivity (m^2/s)")
    modulation: float = Field(
        default=0.3, ge=0.0, lt=1.0, description="Relative amplitude of s(t)"
    )
    period: float = Field(default=1.0, gt=0.0, description="Period of s(t) (s)")
    inflow_value: float = Field(
        default=0.0, description="Dirichlet value of the scalar at Inflow nodes"
    )
    num_bumps: int = Field(default=3, ge=0, description="Gaussian bumps in u_0")
