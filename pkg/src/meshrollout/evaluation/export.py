"""Latent export: raw per-layer arrays plus principal-component coordinates."""

import csv
from collections.abc import Sequence
from pathlib import Path
from typing import Union

import numpy as np
import structlog

logger = structlog.get_logger(__name__)

PCA_COMPONENTS = 2


def principal_coordinates(latent: np.ndarray, k: int = PCA_COMPONENTS) -> np.ndarray:
    """Project ``N x d`` rows on their leading ``k`` principal axes.

    Axis signs are fixed so that the largest-magnitude loading is positive;
    missing components (``d < k``) are zero columns.
    """
    latent = np.asarray(latent, dtype=np.float64)
    centered = latent - latent.mean(axis=0, keepdims=True)
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    axes = vt[:k]
    pivots = np.argmax(np.abs(axes), axis=1)
    signs = np.sign(axes[np.arange(axes.shape[0]), pivots])
    axes = axes * np.where(signs == 0, 1.0, signs)[:, None]
    coordinates = centered @ axes.T
    if coordinates.shape[1] < k:
        padding = np.zeros((coordinates.shape[0], k - coordinates.shape[1]))
        coordinates = np.hstack([coordinates, padding])
    return coordinates


def export_latents(
    path: Union[str, Path], latents: Sequence[np.ndarray]
) -> tuple[Path, Path]:
    """Write ``layer_<k>`` arrays to ``path`` (``.npz``) and a PCA table next to it.

    The CSV has columns ``layer, node, pc1, pc2``.
    """
    if not latents:
        raise ValueError("no latents to export")
    path = Path(path).with_suffix(".npz")
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savez(path, **{f"layer_{k}": np.asarray(z) for k, z in enumerate(latents)})

    table = path.with_name(path.stem + "_pca.csv")
    with open(table, "w", newline="") as f:
        writer = csv.writer(f)
        header = ["layer", "node"] + [f"pc{c + 1}" for c in range(PCA_COMPONENTS)]
        writer.writerow(header)
        for layer, z in enumerate(latents):
            for node, row in enumerate(principal_coordinates(z)):
                writer.writerow([layer, node] + [f"{v:.9g}" for v in row])
    logger.info("Exported latents", path=str(path), layers=len(latents))
    return path, table
