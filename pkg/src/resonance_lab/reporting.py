"""Deterministic report serialization: JSON, CSV and flat binary snapshots.

Identical inputs must produce byte-identical files, so floats are rendered
with fixed rules: 17 significant digits in JSON, shortest round-trip (repr)
in CSV.  JSON keys are emitted sorted.  Snapshots use a flat little-endian
layout: int64 ndim, int64 points_per_axis, float64 half_width, then each
field's row-major doubles.
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import Sequence

import numpy as np

from .grid import Grid


def _json_format(value, indent: int) -> str:
    pad = " " * indent
    if value is None:
        return "null"
    if isinstance(value, bool) or isinstance(value, np.bool_):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if v != v:
            return "null"
        if v in (float("inf"), float("-inf")):
            return '"inf"' if v > 0 else '"-inf"'
        return format(v, ".17g")
    if isinstance(value, str):
        out = value.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")
        return f'"{out}"'
    if isinstance(value, np.ndarray):
        value = value.tolist()
    if isinstance(value, (list, tuple)):
        if not value:
            return "[]"
        items = [_json_format(v, indent + 2) for v in value]
        inner = ",\n".join(pad + "  " + it for it in items)
        return "[\n" + inner + "\n" + pad + "]"
    if isinstance(value, dict):
        if not value:
            return "{}"
        parts = []
        for key in sorted(value, key=str):
            rendered = _json_format(value[key], indent + 2)
            parts.append(f'{pad}  "{key}": {rendered}')
        return "{\n" + ",\n".join(parts) + "\n" + pad + "}"
    raise TypeError(f"cannot serialize {type(value).__name__} deterministically")


def json_dumps(obj) -> str:
    """Deterministic JSON text: sorted keys, floats at 17 significant digits."""
    return _json_format(obj, 0) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_text(json_dumps(obj), encoding="utf-8")


def csv_cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    """CSV with shortest round-trip float formatting."""
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(csv_cell(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_snapshots(path, grid: Grid, fields: Sequence[np.ndarray]) -> None:
    """Flat binary snapshot file (header: ndim, n, L; then row-major doubles)."""
    with open(path, "wb") as fh:
        fh.write(struct.pack("<qqd", grid.ndim, grid.points_per_axis, grid.half_width))
        for u in fields:
            arr = np.ascontiguousarray(grid.check_field(u), dtype="<f8")
            fh.write(arr.tobytes())


def read_snapshots(path) -> tuple[int, int, float, np.ndarray]:
    """Inverse of write_snapshots; returns (ndim, n, L, fields[k, nodes])."""
    raw = Path(path).read_bytes()
    ndim, n, half_width = struct.unpack_from("<qqd", raw, 0)
    body = np.frombuffer(raw, dtype="<f8", offset=24)
    nodes = n**ndim
    if body.size % nodes:
        raise ValueError("snapshot payload is not a whole number of fields")
    return int(ndim), int(n), float(half_width), body.reshape(-1, nodes)
