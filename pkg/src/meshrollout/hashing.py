"""Content hashes for run manifests and reproducibility checks."""

import hashlib
import json
from pathlib import Path
from typing import Any, Union


def canonical_json(payload: Any) -> str:
    """Serialize ``payload`` with sorted keys and no incidental whitespace."""
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), default=str)


def content_hash(payload: Any) -> str:
    """Git-style blob hash of the canonical JSON form of ``payload``."""
    body = canonical_json(payload).encode("utf-8")
    header = f"blob {len(body)}\0".encode()
    return hashlib.sha1(header + body).hexdigest()


def generate_file_hash(file_path: Union[str, Path], chunk_size: int = 8192) -> str:
    """Generate a sha1 digest of a file's bytes."""
    digest = hashlib.sha1()
    with open(file_path, "rb") as f:
        for chunk in iter(lambda: f.read(chunk_size), b""):
            digest.update(chunk)
    return digest.hexdigest()
