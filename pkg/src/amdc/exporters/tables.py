"""
CSV and JSON writers for amdc run artifacts, and the run manifest.

All writers produce deterministic bytes: fixed column order, ``\\n`` line
endings, sorted JSON keys. Infinite values are written as the string
``"inf"``.
"""

import json
import math
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

MANIFEST_NAME = "manifest.json"
TIMINGS_NAME = "timings.json"
VERSIONED_PACKAGES = ("amdc", "numpy", "scipy", "scikit-learn", "pandas", "numba", "joblib")


def jsonable(value: Any) -> Any:
    """Convert numpy scalars/arrays and non-finite floats into JSON values."""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return jsonable(value.tolist())
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        if math.isnan(value):
            return None
    if isinstance(value, Path):
        return str(value)
    return value


def write_json(path: str | Path, data: Any) -> Path:
    path = Path(path)
    path.write_text(json.dumps(jsonable(data), indent=2, sort_keys=True, allow_nan=False) + "\n")
    return path


def write_frame(path: str | Path, frame: pd.DataFrame) -> Path:
    path = Path(path)
    frame = frame.map(lambda v: "inf" if isinstance(v, float) and math.isinf(v) else v)
    frame.to_csv(path, index=False, lineterminator="\n")
    return path


def write_assignments(path: str | Path, ids: list[str], labels: list[str]) -> Path:
    return write_frame(path, pd.DataFrame({"id": ids, "cluster": labels}))


def package_versions() -> dict[str, str]:
    versions = {}
    for name in VERSIONED_PACKAGES:
        try:
            versions[name] = version(name)
        except PackageNotFoundError:
            versions[name] = "unknown"
    return versions


def write_manifest(
    output_dir: str | Path,
    command: str,
    config: dict[str, Any],
    outputs: list[Path],
    seeds: dict[str, Any] | None = None,
    extra: dict[str, Any] | None = None,
) -> Path:
    """Write ``manifest.json`` describing a run; enough to repeat it."""
    output_dir = Path(output_dir)
    manifest = {
        "command": command,
        "config": config,
        "seeds": seeds or {"seed": config.get("seed")},
        "versions": package_versions(),
        "outputs": sorted(p.name for p in outputs),
    }
    if extra:
        manifest.update(extra)
    return write_json(output_dir / MANIFEST_NAME, manifest)


def write_timings(output_dir: str | Path, timings: dict[str, float]) -> Path:
    """Wall-clock timings, kept apart from the deterministic artifacts."""
    return write_json(Path(output_dir) / TIMINGS_NAME, timings)
