"""File formats: sample matrices, COO graphs, embeddings, label lists.

Text matrices are one sample per line, comma or whitespace separated, with
an optional header line detected by a non-numeric first line.  The binary
matrix format is little-endian: a header of two unsigned 64-bit counts
(n_samples, n_features) followed by row-major 64-bit floats.  Graph files
reuse the same conventions (see ``write_graph``).
"""

from __future__ import annotations

import os

import numpy as np

from .data import DataError, DataMatrix

_TEXT_FORMATS = {"text", "delimited-text"}
_BINARY_FORMATS = {"binary", "raw-binary-f64"}
_BINARY32_FORMATS = {"binary32", "raw-binary-f32"}

_MAGIC_FLOAT_FMT = "%.17g"  # round-trips float64 exactly


def resolve_format(path: str, fmt: str = "auto") -> str:
    if fmt in _TEXT_FORMATS:
        return "text"
    if fmt in _BINARY_FORMATS:
        return "binary"
    if fmt in _BINARY32_FORMATS:
        return "binary32"
    if fmt == "auto":
        return "binary" if str(path).endswith(".bin") else "text"
    raise DataError(f"unknown matrix format {fmt!r}")


def _parse_row(line: str, row: int, n_cols: int | None) -> np.ndarray:
    fields = line.replace(",", " ").split()
    try:
        vals = np.array(fields, dtype=np.float64)
    except ValueError:
        for c, f in enumerate(fields):
            try:
                float(f)
            except ValueError:
                raise DataError(
                    f"unparseable value {f!r} at row {row}, column {c}"
                ) from None
        raise
    if n_cols is not None and vals.size != n_cols:
        raise DataError(
            f"ragged row {row}: expected {n_cols} columns, found {vals.size}"
        )
    bad = ~np.isfinite(vals)
    if bad.any():
        c = int(np.argmax(bad))
        raise DataError(f"non-finite value {fields[c]!r} at row {row}, column {c}")
    return vals


def _is_numeric_line(line: str) -> bool:
    fields = line.replace(",", " ").split()
    if not fields:
        return False
    try:
        [float(f) for f in fields]
    except ValueError:
        return False
    return True


def _load_text(path: str) -> DataMatrix:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh]
    lines = [(i, ln) for i, ln in enumerate(lines) if ln]
    if not lines:
        raise DataError(f"{path}: no rows")
    if not _is_numeric_line(lines[0][1]):
        lines = lines[1:]  # header
        if not lines:
            raise DataError(f"{path}: no rows")
    rows = []
    n_cols = None
    for r, (_, ln) in enumerate(lines):
        vals = _parse_row(ln, r, n_cols)
        n_cols = vals.size if n_cols is None else n_cols
        rows.append(vals)
    return DataMatrix(np.vstack(rows))


def _load_binary(path: str, dtype: str) -> DataMatrix:
    width = np.dtype(dtype).itemsize
    payload = os.path.getsize(path) - 16
    with open(path, "rb") as fh:
        header = np.fromfile(fh, dtype="<u8", count=2)
        if header.size < 2:
            raise DataError(f"{path}: truncated binary header")
        n, d = int(header[0]), int(header[1])
        if n == 0:
            raise DataError(f"{path}: no rows")
        if payload != width * n * d:
            raise DataError(
                f"{path}: header says {n}x{d} but payload holds "
                f"{payload // width} values"
            )
        vals = np.fromfile(fh, dtype=dtype, count=n * d)
    # 32-bit input is promoted to float64 on load
    return DataMatrix(vals.astype(np.float64).reshape(n, d))


def load_matrix(path: str, fmt: str = "auto") -> DataMatrix:
    """Load a sample matrix; see module docstring for formats."""
    if not os.path.exists(path):
        raise DataError(f"{path}: file not found")
    resolved = resolve_format(path, fmt)
    if resolved == "binary":
        return _load_binary(path, "<f8")
    if resolved == "binary32":
        return _load_binary(path, "<f4")
    return _load_text(path)


def write_matrix(path: str, X, fmt: str = "auto", delimiter: str = ",") -> None:
    arr = X.values if isinstance(X, DataMatrix) else np.asarray(X, dtype=np.float64)
    resolved = resolve_format(path, fmt)
    if resolved == "binary32":
        raise DataError("32-bit matrices are read-only; write as 'binary'")
    if resolved == "binary":
        with open(path, "wb") as fh:
            np.array(arr.shape, dtype="<u8").tofile(fh)
            np.ascontiguousarray(arr, dtype="<f8").tofile(fh)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            for row in arr:
                fh.write(delimiter.join(_MAGIC_FLOAT_FMT % v for v in row))
                fh.write("\n")


# ---------------------------------------------------------------------------
# sparse graphs (COO)
# ---------------------------------------------------------------------------


def write_graph(path: str, n_vertices: int, rows, cols, weights,
                fmt: str = "auto") -> None:
    """Write edges in COO form.

    Text: a header line ``n_vertices n_edges`` then one ``i j w`` line per
    edge.  Binary: little-endian header of two u64 counts, then the source
    ids (u64), target ids (u64) and weights (f64) as contiguous blocks.
    """
    rows = np.asarray(rows, dtype=np.uint64)
    cols = np.asarray(cols, dtype=np.uint64)
    weights = np.asarray(weights, dtype=np.float64)
    if resolve_format(path, fmt) == "binary":
        with open(path, "wb") as fh:
            np.array([n_vertices, rows.size], dtype="<u8").tofile(fh)
            rows.astype("<u8").tofile(fh)
            cols.astype("<u8").tofile(fh)
            weights.astype("<f8").tofile(fh)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"{n_vertices} {rows.size}\n")
            for i, j, w in zip(rows, cols, weights):
                fh.write(f"{i} {j} {_MAGIC_FLOAT_FMT % w}\n")


def read_graph(path: str, fmt: str = "auto"):
    """Read a COO graph; returns (n_vertices, rows, cols, weights)."""
    if resolve_format(path, fmt) == "binary":
        with open(path, "rb") as fh:
            header = np.fromfile(fh, dtype="<u8", count=2)
            if header.size < 2:
                raise DataError(f"{path}: truncated graph header")
            n, e = int(header[0]), int(header[1])
            rows = np.fromfile(fh, dtype="<u8", count=e).astype(np.int64)
            cols = np.fromfile(fh, dtype="<u8", count=e).astype(np.int64)
            weights = np.fromfile(fh, dtype="<f8", count=e)
        if rows.size != e or cols.size != e or weights.size != e:
            raise DataError(f"{path}: truncated graph payload")
        return n, rows, cols, weights
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline().split()
        if len(first) != 2:
            raise DataError(f"{path}: malformed graph header")
        n, e = int(first[0]), int(first[1])
        data = np.loadtxt(fh, dtype=np.float64, ndmin=2)
    if data.size == 0:
        data = np.empty((0, 3))
    if data.shape[0] != e or (e and data.shape[1] != 3):
        raise DataError(f"{path}: expected {e} 'i j w' edge lines")
    return n, data[:, 0].astype(np.int64), data[:, 1].astype(np.int64), data[:, 2]


def load_labels(path: str) -> list[str]:
    """One label per line; blank lines are skipped."""
    with open(path, "r", encoding="utf-8") as fh:
        return [ln.strip() for ln in fh if ln.strip()]


def atomic_write(path: str, writer) -> None:
    """Write via a temp file + rename so failures leave no partial output."""
    tmp = f"{path}.tmp.{os.getpid()}"
    try:
        writer(tmp)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.remove(tmp)
