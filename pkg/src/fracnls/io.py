"""Persistence: FNLS1 binary fields, CSV tables, flat metadata files.

FNLS1 layout (little-endian)::

    b"FNLS" | u32 version=1 | u32 dim | u32 M | u32 ncomp | f64 L | f64 alpha
    then per component M**dim complex values as (re, im) f64 pairs, row-major
"""
from __future__ import annotations

import csv
import math
import struct
from pathlib import Path

import numpy as np

from .config import dump_flat
from .grid import Grid, make_grid

MAGIC = b"FNLS"
VERSION = 1
_HEADER = struct.Struct("<4sIIIIdd")


class FormatError(ValueError):
    pass


def write_fnls(path, grid: Grid, alpha: float, components) -> None:
    comps = [np.ascontiguousarray(grid.check(c), dtype="<c16") for c in components]
    if not comps:
        raise ValueError("at least one component is required")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, grid.dim, grid.n, len(comps), float(grid.length), float(alpha)))
        for c in comps:
            fh.write(c.tobytes(order="C"))


def read_fnls(path):
    """Return ``(grid, alpha, [components])``."""
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise FormatError("file too short for an FNLS1 header")
    magic, version, dim, n, ncomp, length, alpha = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"unsupported version {version}")
    grid = make_grid(dim, n, length)
    count = grid.size
    expected = _HEADER.size + ncomp * count * 16
    if len(data) != expected:
        raise FormatError(f"expected {expected} bytes, found {len(data)}")
    comps = []
    for j in range(ncomp):
        off = _HEADER.size + j * count * 16
        arr = np.frombuffer(data, dtype="<c16", count=count, offset=off)
        comps.append(arr.reshape(grid.shape).astype(complex))
    return grid, alpha, comps


def format_cell(v) -> str:
    """Shortest round-trip text for floats; fixed spellings for bools and non-finite values."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    return str(v)


def write_csv(path, header, rows) -> None:
    """Rows are sequences aligned with ``header`` or dicts keyed by it."""
    header = list(header)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            if isinstance(row, dict):
                row = [row[k] for k in header]
            w.writerow([format_cell(v) for v in row])


def write_columns(path, columns: dict) -> None:
    keys = list(columns)
    n = len(columns[keys[0]])
    write_csv(path, keys, ([columns[k][i] for k in keys] for i in range(n)))


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_metadata(path, mapping: dict) -> None:
    Path(path).write_text(dump_flat(mapping))
