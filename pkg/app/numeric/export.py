"""JSON and CSV writers for profiles and check results.

Files are written to a temporary sibling and renamed into place, so a failed
run never leaves a partial file behind.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, Mapping

import numpy as np

from app.numeric.nevanlinna import NevProfile

logger = logging.getLogger(__name__)


class ExportError(RuntimeError):
    """Raised when an output file cannot be written."""


def _plain(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, (np.floating, float)):
        return float(value)
    if isinstance(value, (np.integer, int)) and not isinstance(value, bool):
        return int(value)
    if isinstance(value, complex):
        return {"re": value.real, "im": value.imag}
    if isinstance(value, Mapping):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if value is None or isinstance(value, (bool, str)):
        return value
    return str(value)


def profile_to_dict(profile: NevProfile) -> Dict[str, Any]:
    series = profile.series()
    return {
        "r_grid": _plain(series.pop("r")),
        "functions": list(profile.functions),
        "values": list(profile.values),
        "series": {name: _plain(column) for name, column in series.items()},
        "metadata": _plain(profile.metadata),
    }


def dumps_json(payload: Mapping[str, Any]) -> str:
    # json writes floats with repr, which round-trips exactly
    return json.dumps(_plain(payload), ensure_ascii=False, indent=2, sort_keys=False) + "\n"


def profile_to_csv(profile: NevProfile) -> str:
    series = profile.series()
    names = list(series)
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(names)
    for row in zip(*(series[name] for name in names)):
        writer.writerow([format(float(value), ".17g") for value in row])
    return buffer.getvalue()


def write_atomic(path: Path, text: str) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        handle, temp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
        with os.fdopen(handle, "w", encoding="utf-8", newline="") as stream:
            stream.write(text)
        os.replace(temp, path)
    except OSError as exc:
        raise ExportError(f"无法写入文件: {path}") from exc
    logger.info("wrote %s", path)
    return path


def write_profile(profile: NevProfile, stem: Path, formats=("json", "csv")) -> Dict[str, Path]:
    """Write ``stem.json`` and/or ``stem.csv``; returns the written paths by format."""
    stem = Path(stem)
    written = {}
    for fmt in formats:
        if fmt == "json":
            written[fmt] = write_atomic(stem.with_suffix(".json"), dumps_json(profile_to_dict(profile)))
        elif fmt == "csv":
            written[fmt] = write_atomic(stem.with_suffix(".csv"), profile_to_csv(profile))
        else:
            raise ExportError(f"不支持的输出格式: {fmt}")
    return written


def read_csv_columns(text: str) -> Dict[str, np.ndarray]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    rows = [[float(cell) for cell in row] for row in reader if row]
    data = np.array(rows, dtype=float).reshape(len(rows), len(header))
    return {name: data[:, index] for index, name in enumerate(header)}
