"""Binary trajectory files.

Layout (all little-endian)::

    header   magic "MRT1" | byte-order flag u8 (1 = little) | version u8 |
             2 reserved bytes | 7 x int64 counts | delta_t f8
    counts   num_nodes, num_edges (directed), num_cells, num_steps,
             num_components, dim, schema_bytes
    payload  schema JSON (utf-8) | positions f8 N x dim | edges i8 E x 2 |
             cells i8 F x 3 | node_type u1 N | states f4 T x N x c

States are written last so long trajectories can be streamed step by step.
"""

import json
import struct
from collections.abc import Iterator
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Union

import numpy as np
import structlog

from meshrollout.mesh import MeshGraph, MeshStructureError

from .exceptions import (
    EndiannessError,
    SchemaMismatchError,
    TrajectoryHeaderError,
    TruncatedPayloadError,
)
from .models import FieldSchema, Trajectory

logger = structlog.get_logger(__name__)

PathLike = Union[str, Path]

MAGIC = b"MRT1"
FORMAT_VERSION = 1
LITTLE_ENDIAN = 1
_HEADER = struct.Struct("<4sBBxx7qd")
HEADER_SIZE = _HEADER.size


@dataclass(frozen=True)
class TrajectoryHeader:
    """Decoded fixed-size header of a trajectory file."""

    num_nodes: int
    num_edges: int
    num_cells: int
    num_steps: int
    num_components: int
    dim: int
    schema_bytes: int
    delta_t: float

    @property
    def mesh_bytes(self) -> int:
        return (
            self.num_nodes * self.dim * 8
            + self.num_edges * 2 * 8
            + self.num_cells * 3 * 8
            + self.num_nodes
        )

    @property
    def state_bytes(self) -> int:
        """Size of a single ``N x c`` float32 state."""
        return self.num_nodes * self.num_components * 4

    @property
    def states_offset(self) -> int:
        return HEADER_SIZE + self.schema_bytes + self.mesh_bytes

    @property
    def payload_bytes(self) -> int:
        return self.schema_bytes + self.mesh_bytes + self.num_steps * self.state_bytes


def _encode_header(header: TrajectoryHeader) -> bytes:
    return _HEADER.pack(
        MAGIC,
        LITTLE_ENDIAN,
        FORMAT_VERSION,
        header.num_nodes,
        header.num_edges,
        header.num_cells,
        header.num_steps,
        header.num_components,
        header.dim,
        header.schema_bytes,
        header.delta_t,
    )


def _decode_header(raw: bytes, path: str) -> TrajectoryHeader:
    if len(raw) < HEADER_SIZE:
        raise TrajectoryHeaderError(
            f"file has {len(raw)} bytes, shorter than the {HEADER_SIZE}-byte header", path
        )
    magic, byte_order, version, *counts, delta_t = _HEADER.unpack(raw[:HEADER_SIZE])
    if magic != MAGIC:
        raise TrajectoryHeaderError(f"bad magic bytes {magic!r}", path)
    if byte_order != LITTLE_ENDIAN:
        raise EndiannessError(
            f"byte-order flag {byte_order} is not little-endian ({LITTLE_ENDIAN})", path
        )
    if version != FORMAT_VERSION:
        raise TrajectoryHeaderError(f"unsupported format version {version}", path)
    if any(c < 0 for c in counts):
        raise TrajectoryHeaderError(f"negative header count in {counts}", path)
    header = TrajectoryHeader(*counts, delta_t=delta_t)
    if header.dim not in (2, 3):
        raise TrajectoryHeaderError(f"dimension {header.dim} is not 2 or 3", path)
    if header.num_steps < 2:
        raise TrajectoryHeaderError(f"need at least 2 steps, got {header.num_steps}", path)
    return header


def _decode_schema(raw: bytes, header: TrajectoryHeader, path: str) -> FieldSchema:
    try:
        schema = FieldSchema.from_dict(json.loads(raw.decode("utf-8")))
    except (UnicodeDecodeError, ValueError, KeyError, TypeError) as e:
        raise TrajectoryHeaderError("schema block is not valid JSON", path, str(e)) from e
    if schema.num_components != header.num_components:
        raise SchemaMismatchError(
            f"schema lists {schema.num_components} components, "
            f"header declares {header.num_components}",
            path,
        )
    return schema


def write_trajectory(path: PathLike, traj: Trajectory) -> None:
    """Write ``traj`` to ``path`` (overwriting)."""
    path = Path(path)
    mesh = traj.mesh
    schema_blob = json.dumps(traj.schema.to_dict(), sort_keys=True).encode("utf-8")
    cells = mesh.cells if mesh.cells is not None else np.empty((0, 3), dtype=np.int64)
    header = TrajectoryHeader(
        num_nodes=mesh.num_nodes,
        num_edges=mesh.num_edges,
        num_cells=int(cells.shape[0]),
        num_steps=traj.num_steps,
        num_components=traj.num_components,
        dim=mesh.dim,
        schema_bytes=len(schema_blob),
        delta_t=float(traj.delta_t),
    )
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(_encode_header(header))
        f.write(schema_blob)
        f.write(mesh.positions.astype("<f8").tobytes())
        f.write(mesh.edges.astype("<i8").tobytes())
        f.write(cells.astype("<i8").tobytes())
        f.write(mesh.node_type.astype("u1").tobytes())
        f.write(traj.states.astype("<f4").tobytes())
    logger.debug(
        "Wrote trajectory",
        path=str(path),
        num_nodes=header.num_nodes,
        num_steps=header.num_steps,
    )


def read_header(path: PathLike) -> TrajectoryHeader:
    """Decode only the fixed header of a trajectory file."""
    with open(path, "rb") as f:
        return _decode_header(f.read(HEADER_SIZE), str(path))


def _read_mesh(
    f: BinaryIO, header: TrajectoryHeader, path: str
) -> tuple[FieldSchema, MeshGraph]:
    schema = _decode_schema(f.read(header.schema_bytes), header, path)
    n, e, c, dim = header.num_nodes, header.num_edges, header.num_cells, header.dim
    positions = np.frombuffer(f.read(n * dim * 8), dtype="<f8").reshape(n, dim)
    edges = np.frombuffer(f.read(e * 16), dtype="<i8").reshape(e, 2)
    cells = np.frombuffer(f.read(c * 24), dtype="<i8").reshape(c, 3)
    node_type = np.frombuffer(f.read(n), dtype="u1")
    try:
        mesh = MeshGraph(
            positions.astype(np.float64),
            edges.astype(np.int64),
            node_type.astype(np.int64),
            cells.astype(np.int64) if c else None,
        )
    except MeshStructureError as e:
        raise TrajectoryHeaderError("mesh block is invalid", path, e.message) from e
    return schema, mesh


def _check_size(path: Path, header: TrajectoryHeader) -> None:
    actual = path.stat().st_size - HEADER_SIZE
    if actual != header.payload_bytes:
        raise TruncatedPayloadError(header.payload_bytes, actual, str(path))


def read_trajectory(path: PathLike) -> Trajectory:
    """Read a trajectory written by :func:`write_trajectory`."""
    path = Path(path)
    with open(path, "rb") as f:
        header = _decode_header(f.read(HEADER_SIZE), str(path))
        _check_size(path, header)
        schema, mesh = _read_mesh(f, header, str(path))
        count = header.num_steps * header.num_nodes * header.num_components
        states = np.frombuffer(f.read(count * 4), dtype="<f4").reshape(
            header.num_steps, header.num_nodes, header.num_components
        )
    return Trajectory(
        mesh=mesh,
        states=states.astype(np.float32),
        delta_t=header.delta_t,
        schema=schema,
    )


def iter_states(path: PathLike) -> Iterator[np.ndarray]:
    """Yield the ``N x c`` states of a trajectory file one step at a time."""
    path = Path(path)
    with open(path, "rb") as f:
        header = _decode_header(f.read(HEADER_SIZE), str(path))
        _check_size(path, header)
        f.seek(header.states_offset)
        shape = (header.num_nodes, header.num_components)
        for _ in range(header.num_steps):
            raw = f.read(header.state_bytes)
            yield np.frombuffer(raw, dtype="<f4").reshape(shape).astype(np.float32)
