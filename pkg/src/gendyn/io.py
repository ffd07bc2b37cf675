"""Plain-text matrix and table files.

Matrices are dense CSV preceded by a ``# rows=<r> cols=<c>`` header line.
Tables are ordinary CSV with a header row of column names.
"""
from __future__ import annotations

import csv
import os
import re
import tempfile
from pathlib import Path

import numpy as np

_HEADER = re.compile(r"#\s*rows\s*=\s*(\d+)\s+cols\s*=\s*(\d+)")


def write_matrix_csv(path, m) -> None:
    m = np.atleast_2d(np.asarray(m, dtype=float))
    with open(path, "w", newline="") as fh:
        fh.write(f"# rows={m.shape[0]} cols={m.shape[1]}\n")
        np.savetxt(fh, m, delimiter=",", fmt="%.17g")


def read_matrix_csv(path) -> np.ndarray:
    with open(path) as fh:
        first = fh.readline()
        match = _HEADER.match(first.strip())
        if not match:
            raise ValueError(f"{path}: first line must be '# rows=<r> cols=<c>', got {first!r}")
        rows, cols = int(match.group(1)), int(match.group(2))
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if data.size == 0:
        data = data.reshape(0, cols)
    if data.shape != (rows, cols):
        raise ValueError(f"{path}: header says {rows}x{cols} but found {data.shape[0]}x{data.shape[1]}")
    return data


def write_table_csv(path, columns: dict) -> None:
    """Write equal-length columns; floats use repr so reruns are byte-identical."""
    names = list(columns)
    cols = [np.asarray(columns[n]).ravel() for n in names]
    n = {len(c) for c in cols}
    if len(n) > 1:
        raise ValueError(f"columns have different lengths: {dict(zip(names, map(len, cols)))}")
    atomic_write(path, lambda fh: _write_rows(fh, names, cols))


def _write_rows(fh, names, cols):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(names)
    for row in zip(*cols):
        w.writerow([_fmt(v) for v in row])


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def read_table_csv(path) -> dict:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path} is empty")
    names, body = rows[0], rows[1:]
    out = {}
    for j, name in enumerate(names):
        vals = [r[j] for r in body]
        try:
            out[name] = np.array([float(v) for v in vals])
        except ValueError:
            out[name] = np.array(vals)
    return out


def atomic_write(path, writer) -> None:
    """Write through a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            writer(fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
