"""Plain-text file formats: measures, dense grids and data series.

Measure file::

    # d=2 n=3
    0.1 0.2 0.5
    0.3 0.4 0.25
    ...

One atom per line: ``d`` coordinates followed by the weight, separated by
whitespace or commas. Grid files start with ``# <rows> <cols>`` and hold
one matrix row per line. Series files are whitespace-separated columns
below one ``#`` header naming them. Values are written with 17 significant
digits, so a write/read cycle is lossless.
"""

from __future__ import annotations

import os
import re

import numpy as np

from .core import DiscreteMeasure
from .errors import MeasureFileError, ValidationError

_FMT = "%.17g"
_HEADER = re.compile(r"^#\s*d\s*=\s*(\d+)\s+n\s*=\s*(\d+)\s*$")
_SPLIT = re.compile(r"[,\s]+")


def _fields(line):
    return [f for f in _SPLIT.split(line.strip()) if f]


def _floats(fields, path, lineno):
    try:
        return [float(f) for f in fields]
    except ValueError as exc:
        raise MeasureFileError(f"not a number: {exc}", path, lineno) from None


def _read_lines(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read().splitlines()
    except OSError as exc:
        raise MeasureFileError(f"cannot read file: {exc.strerror}", path) from None


def _write(path, text):
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise MeasureFileError(f"cannot write file: {exc.strerror}", path) from None


def read_measure_file(path):
    lines = _read_lines(path)
    if not lines:
        raise MeasureFileError("empty file", path, 1)
    m = _HEADER.match(lines[0].strip())
    if not m:
        raise MeasureFileError("expected header '# d=<d> n=<n>'", path, 1)
    d, n = int(m.group(1)), int(m.group(2))
    if d < 1:
        raise MeasureFileError("dimension must be at least 1", path, 1)
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        vals = _floats(_fields(line), path, lineno)
        if len(vals) != d + 1:
            raise MeasureFileError(f"expected {d + 1} columns, found {len(vals)}", path, lineno)
        if vals[-1] < 0:
            raise MeasureFileError("negative weight", path, lineno)
        rows.append(vals)
    if len(rows) != n:
        raise MeasureFileError(f"header announces {n} atoms, found {len(rows)}", path)
    arr = np.array(rows, dtype=float).reshape(n, d + 1)
    try:
        return DiscreteMeasure(arr[:, :d], arr[:, d])
    except ValidationError as exc:
        raise MeasureFileError(str(exc), path) from None


def write_measure_file(path, measure):
    data = np.column_stack([measure.points, measure.weights])
    body = "\n".join(" ".join(_FMT % v for v in row) for row in data)
    _write(path, f"# d={measure.dim} n={measure.n}\n{body}\n")


def read_grid_file(path):
    lines = _read_lines(path)
    if not lines:
        raise MeasureFileError("empty file", path, 1)
    head = _fields(lines[0].lstrip("#"))
    if not lines[0].startswith("#") or len(head) != 2:
        raise MeasureFileError("expected header '# <rows> <cols>'", path, 1)
    try:
        nr, nc = int(head[0]), int(head[1])
    except ValueError:
        raise MeasureFileError("expected header '# <rows> <cols>'", path, 1) from None
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        vals = _floats(_fields(line), path, lineno)
        if len(vals) != nc:
            raise MeasureFileError(f"expected {nc} columns, found {len(vals)}", path, lineno)
        rows.append(vals)
    if len(rows) != nr:
        raise MeasureFileError(f"header announces {nr} rows, found {len(rows)}", path)
    return np.array(rows, dtype=float).reshape(nr, nc)


def write_grid_file(path, matrix):
    A = np.atleast_2d(np.asarray(matrix, dtype=float))
    body = "\n".join(" ".join(_FMT % v for v in row) for row in A)
    _write(path, f"# {A.shape[0]} {A.shape[1]}\n{body}\n")


def write_series_file(path, columns, rows):
    """Whitespace table with a ``# name name ...`` header."""
    lines = ["# " + " ".join(columns)]
    for row in rows:
        if len(row) != len(columns):
            raise ValidationError(f"row {row} does not match columns {columns}")
        lines.append(" ".join(_FMT % v if isinstance(v, float) else str(v) for v in row))
    _write(path, "\n".join(lines) + "\n")


def read_series_file(path):
    """Returns ``(columns, rows)`` with all values as floats."""
    lines = _read_lines(path)
    if not lines or not lines[0].startswith("#"):
        raise MeasureFileError("expected a '# <column names>' header", path, 1)
    cols = _fields(lines[0][1:])
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        vals = _floats(_fields(line), path, lineno)
        if len(vals) != len(cols):
            raise MeasureFileError(f"expected {len(cols)} columns, found {len(vals)}", path, lineno)
        rows.append(vals)
    return cols, rows


def ensure_dir(path):
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as exc:
        raise MeasureFileError(f"cannot create directory: {exc.strerror}", path) from None
    return path
