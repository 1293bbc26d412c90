"""Dense CSV matrix files: comma-separated, row-major, optional header row."""

from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .linalg import BadMatrixShape, LinalgError, as_symmetric

__all__ = ["MatrixParseError", "read_matrix", "read_symmetric", "read_vector", "read_labels", "write_matrix", "format_matrix"]


class MatrixParseError(LinalgError):
    code = "ParseError"


def read_matrix(path: str | Path, header: bool = False) -> NDArray[np.float64]:
    """Parse a rectangular numeric CSV; ``header=True`` skips the first row."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    except OSError as exc:
        raise MatrixParseError(f"cannot read {path}: {exc}") from exc
    if header:
        rows = rows[1:]
    if not rows:
        raise MatrixParseError(f"{path}: no data rows")
    width = len(rows[0])
    for i, r in enumerate(rows):
        if len(r) != width:
            raise BadMatrixShape(f"{path}: row {i + 1} has {len(r)} fields, expected {width}")
    try:
        m = np.array([[float(c) for c in r] for r in rows], dtype=np.float64)
    except ValueError as exc:
        raise MatrixParseError(f"{path}: {exc}") from exc
    if not np.all(np.isfinite(m)):
        raise MatrixParseError(f"{path}: non-finite entries")
    return m


def read_symmetric(path: str | Path, header: bool = False) -> NDArray[np.float64]:
    return as_symmetric(read_matrix(path, header))


def read_vector(path: str | Path, header: bool = False) -> NDArray[np.float64]:
    """A single row or a single column, returned flat."""
    m = read_matrix(path, header)
    if m.shape[0] != 1 and m.shape[1] != 1:
        raise BadMatrixShape(f"{path}: expected a single row or column, got shape {m.shape}")
    return m.ravel()


def read_labels(path: str | Path, header: bool = False) -> NDArray[np.str_]:
    """One group label per line (first field)."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r and r[0].strip()]
    except OSError as exc:
        raise MatrixParseError(f"cannot read {path}: {exc}") from exc
    if header:
        rows = rows[1:]
    return np.array([r[0].strip() for r in rows])


def format_matrix(m: ArrayLike) -> str:
    """Shortest round-trip representation of every entry."""
    m = np.atleast_2d(np.asarray(m, dtype=np.float64))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for row in m:
        w.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def write_matrix(path: str | Path, m: ArrayLike) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(format_matrix(m))
