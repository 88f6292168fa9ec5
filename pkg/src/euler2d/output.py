"""Deterministic report serialization and run manifests.

JSON reports are written with sorted keys; CSV floats use shortest
round-trip formatting.  For a fixed (config, seed, inputs) the report files
are byte-identical across repeated runs and worker counts.  Manifests record
the config snapshot, seed, tool version, input digests and outputs; they are
written even when a command fails (wall time makes them run-specific).
"""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

import numpy as np


def _jsonify(obj):
    if hasattr(obj, "to_json"):
        return _jsonify(obj.to_json())
    if isinstance(obj, dict):
        return {k: _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonify(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(_jsonify(obj), fh, sort_keys=True, indent=2)
        fh.write("\n")
    return path


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return path


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def write_manifest(
    out_dir,
    command: str,
    config,
    seed: int,
    inputs,
    outputs,
    wall_time: float,
    status: str,
    error: str | None = None,
) -> Path:
    from . import __version__

    manifest = {
        "command": command,
        "config": _jsonify(config) if config is not None else None,
        "seed": seed,
        "tool_version": __version__,
        "inputs": {str(p): sha256_file(p) for p in inputs if Path(p).is_file()},
        "outputs": [str(p) for p in outputs],
        "wall_time_s": wall_time,
        "status": status,
    }
    if error is not None:
        manifest["error"] = error
    return write_json(Path(out_dir) / "manifest.json", manifest)
