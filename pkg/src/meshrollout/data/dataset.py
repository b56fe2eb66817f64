"""Generation and storage of train/test trajectory splits."""

import json
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Union

import numpy as np
import structlog
from opentelemetry import trace

from meshrollout.hashing import generate_file_hash
from meshrollout.metrics import operation_timer

from .config import DatasetConfig
from .exceptions import DataError
from .generator import generate_mesh
from .io import read_trajectory, write_trajectory
from .models import DatasetSplit, Trajectory
from .solver import simulate

logger = structlog.get_logger(__name__)
tracer = trace.get_tracer(__name__)

SPLIT_MANIFEST = "split.json"


def trajectory_seeds(root_seed: int, index: int) -> tuple[int, int]:
    """Independent (mesh, simulation) seeds of trajectory ``index``."""
    mesh_seed, sim_seed = np.random.SeedSequence([root_seed, index]).generate_state(2)
    return int(mesh_seed), int(sim_seed)


def generate_trajectory(cfg: DatasetConfig, index: int) -> Trajectory:
    """Mesh and simulate trajectory ``index`` of the split described by ``cfg``."""
    mesh_seed, sim_seed = trajectory_seeds(cfg.seed, index)
    mesh = generate_mesh(cfg.num_nodes, mesh_seed, obstacle_radius=cfg.obstacle_radius)
    params = cfg.params
    if cfg.advection_jitter > 0:
        rng = np.random.default_rng(sim_seed)
        scale = rng.uniform(1.0 - cfg.advection_jitter, 1.0 + cfg.advection_jitter)
        ax, ay = params.advection
        params = params.model_copy(update={"advection": (ax * scale, ay * scale)})
    return simulate(mesh, cfg.steps, cfg.delta_t, params=params, seed=sim_seed)


@tracer.start_as_current_span("synthetic_data.generate_dataset")
@operation_timer("generate_dataset")
def generate_dataset(cfg: DatasetConfig, threads: int = 1) -> DatasetSplit:
    """Generate the configured split; results do not depend on ``threads``."""
    total = cfg.num_train + cfg.num_test
    logger.info(
        "Generating dataset",
        num_train=cfg.num_train,
        num_test=cfg.num_test,
        num_nodes=cfg.num_nodes,
        steps=cfg.steps,
        threads=threads,
    )
    if threads > 1 and total > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            trajectories = list(
                pool.map(lambda k: generate_trajectory(cfg, k), range(total))
            )
    else:
        trajectories = [generate_trajectory(cfg, k) for k in range(total)]
    return DatasetSplit(
        train=trajectories[: cfg.num_train],
        test=trajectories[cfg.num_train :],
        seed=cfg.seed,
    )


def save_dataset(split: DatasetSplit, directory: Union[str, Path]) -> Path:
    """Write every trajectory plus a ``split.json`` index of paths and sha1 digests."""
    directory = Path(directory)
    index = {"seed": split.seed, "train": [], "test": []}
    for name, trajectories in (("train", split.train), ("test", split.test)):
        for k, traj in enumerate(trajectories):
            relative = f"{name}/traj_{k:04d}.mrt"
            path = directory / relative
            write_trajectory(path, traj)
            index[name].append({"path": relative, "sha1": generate_file_hash(path)})
    directory.mkdir(parents=True, exist_ok=True)
    (directory / SPLIT_MANIFEST).write_text(json.dumps(index, indent=2))
    logger.info(
        "Saved dataset",
        directory=str(directory),
        num_train=len(split.train),
        num_test=len(split.test),
    )
    return directory


def _read_entry(directory: Path, entry: dict) -> Trajectory:
    path = directory / entry["path"]
    if path.exists() and generate_file_hash(path) != entry["sha1"]:
        raise DataError(f"{path} does not match its recorded sha1 digest")
    return read_trajectory(path)


def load_dataset(directory: Union[str, Path]) -> DatasetSplit:
    """Read a split written by :func:`save_dataset`."""
    directory = Path(directory)
    manifest = directory / SPLIT_MANIFEST
    if not manifest.exists():
        raise DataError(f"No {SPLIT_MANIFEST} in {directory}")
    index = json.loads(manifest.read_text())
    return DatasetSplit(
        train=[_read_entry(directory, entry) for entry in index["train"]],
        test=[_read_entry(directory, entry) for entry in index["test"]],
        seed=int(index["seed"]),
    )
