"""CSV, binary and manifest writers.

Numbers are written with 17 significant digits so every double round-trips.
"""

from __future__ import annotations

import struct

import numpy as np

FIELD_MAGIC = b"VMVFIELD"
_HEADER = struct.Struct("<8sIIdd")  # magic, N, J, dt, dx: 32 bytes


def fmt(v) -> str:
    return format(float(v), ".17g")


def write_boundary_csv(path, times, boundaries) -> None:
    """``t,value`` for one path, ``t,path_0,path_1,...`` for several."""
    b = np.atleast_2d(boundaries)
    with open(path, "w", newline="\n") as fh:
        if b.shape[0] == 1:
            fh.write("t,value\n")
        else:
            fh.write("t," + ",".join(f"path_{i}" for i in range(b.shape[0])) + "\n")
        for n, t in enumerate(times):
            fh.write(fmt(t) + "," + ",".join(fmt(v) for v in b[:, n]) + "\n")


def write_field_csv(path, times, xs, values) -> None:
    """Matrix layout: header row of x values, first column of t values."""
    values = np.asarray(values)
    with open(path, "w", newline="\n") as fh:
        fh.write("t," + ",".join(fmt(x) for x in xs) + "\n")
        for t, row in zip(times, values):
            fh.write(fmt(t) + "," + ",".join(fmt(v) for v in row) + "\n")


def read_field_csv(path):
    """Return ``(times, xs, values)`` from :func:`write_field_csv` output."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        xs = np.array([float(v) for v in header[1:]])
        rows = [line.strip().split(",") for line in fh if line.strip()]
    times = np.array([float(r[0]) for r in rows])
    values = np.array([[float(v) for v in r[1:]] for r in rows])
    return times, xs, values


def write_field_binary(path, values, dt: float, dx: float) -> None:
    """32-byte header (magic, N, J, dt, dx) followed by row-major little-endian doubles."""
    values = np.ascontiguousarray(values, dtype="<f8")
    n_rows, n_cols = values.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(FIELD_MAGIC, n_rows - 1, n_cols - 1, float(dt), float(dx)))
        fh.write(values.tobytes())


def read_field_binary(path):
    """Return ``(values, dt, dx)``."""
    with open(path, "rb") as fh:
        data = fh.read()
    magic, n, j, dt, dx = _HEADER.unpack_from(data)
    if magic != FIELD_MAGIC:
        raise ValueError(f"{path}: not a field dump (magic {magic!r})")
    values = np.frombuffer(data, dtype="<f8", offset=_HEADER.size)
    return values.reshape(n + 1, j + 1).astype(float), dt, dx


def write_key_values(path, items) -> None:
    """``key: value`` lines, one per item, in the given order."""
    with open(path, "w", newline="\n") as fh:
        for k, v in items:
            fh.write(f"{k}: {v}\n")


def write_table_csv(path, header, rows) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) if isinstance(v, float) else str(v) for v in row) + "\n")
