"""CSV ingestion and deterministic JSON/CSV serialization.

Input files are plain comma-separated numeric tables with an optional
header row (auto-detected: a first row with any non-numeric cell is
treated as a header and skipped).  Output JSON is rendered by hand so
that reports are byte-identical across runs: keys sorted, floats in
17-significant-digit shortest-roundtrip form, non-finite values written
as Infinity / -Infinity / NaN.
"""

from __future__ import annotations

import csv
import io

import numpy as np


class CsvFormatError(ValueError):
    """Raised when a CSV input cannot be parsed; names the offending cell."""


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def _read_rows(path: str) -> list[list[float]]:
    with open(path, newline="") as fh:
        raw = [row for row in csv.reader(fh) if any(cell.strip() for cell in row)]
    if not raw:
        raise CsvFormatError(f"{path}: file contains no data rows")
    start = 0
    if not all(_is_number(cell) for cell in raw[0]):
        start = 1
        if len(raw) == 1:
            raise CsvFormatError(f"{path}: only a header row, no data")
    width = len(raw[start])
    rows = []
    for i, row in enumerate(raw[start:], start=start + 1):
        if len(row) != width:
            raise CsvFormatError(
                f"{path}: row {i} has {len(row)} fields, expected {width}"
            )
        vals = []
        for j, cell in enumerate(row, start=1):
            try:
                vals.append(float(cell))
            except ValueError:
                raise CsvFormatError(
                    f"{path}: row {i}, column {j}: {cell.strip()!r} is not a number"
                ) from None
        rows.append(vals)
    return rows


def load_matrix_csv(path: str) -> np.ndarray:
    """Read a CSV file as a 2-D float array."""
    return np.array(_read_rows(path), dtype=np.float64)


def load_vector_csv(path: str) -> np.ndarray:
    """Read a CSV file holding a single row or a single column."""
    m = load_matrix_csv(path)
    if m.shape[0] == 1:
        return m[0]
    if m.shape[1] == 1:
        return m[:, 0]
    raise CsvFormatError(
        f"{path}: expected a single row or column, got shape {m.shape}"
    )


def load_sample_csv(path: str):
    """Read a CSV file of samples (one row per observation) as a SampleMatrix."""
    from normest.blocks import SampleMatrix

    return SampleMatrix(load_matrix_csv(path))


def _format_float(x: float) -> str:
    if np.isnan(x):
        return "NaN"
    if np.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return format(x, ".17g")


def _render(obj, out: io.StringIO) -> None:
    # bool before int: bool is an int subclass
    if obj is None:
        out.write("null")
    elif isinstance(obj, (bool, np.bool_)):
        out.write("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.write(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.write(_format_float(float(obj)))
    elif isinstance(obj, str):
        import json

        out.write(json.dumps(obj))
    elif isinstance(obj, np.ndarray):
        _render(obj.tolist(), out)
    elif isinstance(obj, dict):
        out.write("{")
        for k, key in enumerate(sorted(obj)):
            if not isinstance(key, str):
                raise TypeError(f"JSON object keys must be strings, got {key!r}")
            if k:
                out.write(", ")
            _render(key, out)
            out.write(": ")
            _render(obj[key], out)
        out.write("}")
    elif isinstance(obj, (list, tuple)):
        out.write("[")
        for k, item in enumerate(obj):
            if k:
                out.write(", ")
            _render(item, out)
        out.write("]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__} to JSON")


def dumps_stable(obj) -> str:
    """Serialize to JSON with sorted keys and roundtrip-exact floats."""
    out = io.StringIO()
    _render(obj, out)
    return out.getvalue()


def write_json(path: str | None, obj) -> None:
    """Write stable JSON to a file, or stdout when path is None."""
    text = dumps_stable(obj) + "\n"
    if path is None:
        import sys

        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def write_quantile_csv(path: str, report: dict) -> None:
    """Flatten a benchmark report to CSV: one row per (estimator, quantile)."""
    levels = report["quantile_levels"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["estimator", "level", "value"])
        for name in sorted(report["estimators"]):
            qs = report["estimators"][name]["quantiles"]
            for level, q in zip(levels, qs):
                writer.writerow([name, _format_float(level), _format_float(q)])
