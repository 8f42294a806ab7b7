"""File formats shared by the CLI pipeline stages.

Distributions travel as JSON objects with a "probs" array plus free-form
metadata (bare JSON arrays and whitespace/comma-separated text are also
accepted on input). Floats are always written with 17 significant digits
so values round-trip exactly and repeated runs produce byte-identical
files.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .detector import CountDistribution, DetectorParams, ResponseMatrix
from .states import ParseError, parse_vector

__all__ = [
    "dumps",
    "write_json",
    "write_distribution",
    "read_distribution",
    "write_matrix",
    "read_matrix",
    "write_plot_table",
]


def _format_float(value: float) -> str:
    if not np.isfinite(value):
        raise ValueError(f"cannot serialize non-finite value {value!r}")
    return format(value, ".17g")


def dumps(obj, indent: int = 0) -> str:
    """Serialize to JSON with fixed float formatting (17 significant
    digits) and stable key order (insertion order preserved)."""
    pad = " " * indent
    inner = " " * (indent + 2)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        parts = [
            f"{inner}{json.dumps(str(key))}: {dumps(value, indent + 2)}"
            for key, value in obj.items()
        ]
        return "{\n" + ",\n".join(parts) + "\n" + pad + "}"
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        parts = [f"{inner}{dumps(value, indent + 2)}" for value in obj]
        return "[\n" + ",\n".join(parts) + "\n" + pad + "]"
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _format_float(float(obj))
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_json(path, obj) -> None:
    Path(path).write_text(dumps(obj) + "\n", encoding="utf-8")


def write_distribution(path, values, metadata=None, fmt: str = "json") -> None:
    """Write a distribution file.

    fmt "json" produces a bare JSON array, or an object with a "probs"
    array when metadata is supplied; fmt "csv" produces plain newline-
    separated reals. All three forms are accepted back by the readers.
    """
    values = np.asarray(values, dtype=float)
    if fmt == "csv":
        lines = "\n".join(_format_float(v) for v in values)
        Path(path).write_text(lines + "\n", encoding="utf-8")
        return
    if fmt != "json":
        raise ValueError(f"unknown format {fmt!r}")
    if metadata:
        payload = {"probs": values}
        payload.update(metadata)
        write_json(path, payload)
    else:
        write_json(path, values)


def read_distribution(path) -> tuple[np.ndarray, dict]:
    """Read any accepted distribution format; returns (values, metadata)."""
    text = Path(path).read_text(encoding="utf-8")
    values = parse_vector(text)
    metadata = {}
    stripped = text.strip()
    if stripped.startswith("{"):
        payload = json.loads(stripped)
        metadata = {k: v for k, v in payload.items() if k != "probs"}
    return values, metadata


def write_matrix(path, mat: ResponseMatrix) -> None:
    write_json(
        path,
        {
            "eta": mat.params.eta,
            "n_noise": mat.params.n_noise,
            "n_max": mat.n_max,
            "m_max": mat.m_max,
            "entries": mat.entries,
        },
    )


def read_matrix(path) -> ResponseMatrix:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        params = DetectorParams(payload["eta"], payload["n_noise"])
        entries = np.asarray(payload["entries"], dtype=float)
        if entries.ndim != 2:
            raise ValueError("entries must be a matrix")
        expected = (payload["m_max"] + 1, payload["n_max"] + 1)
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ParseError(f"invalid response-matrix file {path}: {exc}") from exc
    if entries.shape != expected:
        raise ParseError(
            f"entries shape {entries.shape} does not match declared window "
            f"{expected}"
        )
    col_tail = np.maximum(0.0, 1.0 - entries.sum(axis=0))
    return ResponseMatrix(entries, params, col_tail)


def read_counts(path) -> tuple[CountDistribution, dict]:
    values, metadata = read_distribution(path)
    dist = CountDistribution(values)
    dist.validate()
    return dist, metadata


def write_plot_table(path, columns: dict) -> None:
    """Write aligned series as CSV: one header row, then one row per index,
    shorter series padded with zeros."""
    names = list(columns)
    arrays = [np.asarray(columns[name], dtype=float) for name in names]
    length = max(arr.size for arr in arrays)
    rows = [",".join(["n"] + names)]
    for i in range(length):
        cells = [str(i)]
        for arr in arrays:
            cells.append(_format_float(arr[i]) if i < arr.size else "0")
        rows.append(",".join(cells))
    Path(path).write_text("\n".join(rows) + "\n", encoding="utf-8")
