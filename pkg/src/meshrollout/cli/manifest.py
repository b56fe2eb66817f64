"""Run manifests and small CSV/JSON writers shared by the commands."""

import csv
import json
from collections.abc import Sequence
from pathlib import Path
from typing import Any, Optional

import structlog

from meshrollout import __version__
from meshrollout.metrics import get_metrics

from .config import ExperimentConfig

logger = structlog.get_logger(__name__)

MANIFEST_FILE = "manifest.json"


def write_json(path: Path, payload: Any) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=True, default=str)
        f.write("\n")
    return path


def write_csv(path: Path, columns: Sequence[str], rows: Sequence[dict]) -> Path:
    """Floats are written with 9 significant digits so reruns compare byte-wise."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=list(columns))
        writer.writeheader()
        for row in rows:
            writer.writerow(
                {
                    key: f"{value:.9g}" if isinstance(value, float) else value
                    for key, value in row.items()
                    if key in columns
                }
            )
    return path


def write_manifest(
    out: Path,
    command: str,
    config: Optional[ExperimentConfig],
    metrics: Optional[dict[str, Any]] = None,
) -> Path:
    """Config copy, content hash, results and timings of one command."""
    payload = {
        "command": command,
        "version": __version__,
        "config": config.model_dump(mode="json") if config is not None else None,
        "content_hash": config.content_hash if config is not None else None,
        "metrics": metrics or {},
        "timings": get_metrics().get_all_stats(),
    }
    path = write_json(Path(out) / MANIFEST_FILE, payload)
    logger.info("Wrote manifest", path=str(path), command=command)
    return path
