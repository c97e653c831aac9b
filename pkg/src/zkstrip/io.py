"""Readers and writers for snapshots, boundary traces and diagnostics.

Binary frame layout (little endian)::

    offset  size  content
    0       8     magic b"ZKFRAME1"
    8       4     uint32 number of dimensions (3: time, x, y)
    12      4*nd  uint32 sizes, row-major order
    ..      4     dtype tag, ascii, padded with spaces ("f8  " or "f4  ")
    ..      8*nt  float64 times
    ..      8*nx  float64 x nodes
    ..      8*ny  float64 y nodes
    ..            payload u[t, x, y] in row-major order
"""
from __future__ import annotations

import csv
import json
import math
import struct
from pathlib import Path

import numpy as np

from .transverse import BoundaryTrace, TransverseBasis

__all__ = [
    "FormatError",
    "MAGIC",
    "write_snapshots_csv",
    "read_snapshots_csv",
    "write_frames",
    "read_frames",
    "write_jsonl",
    "read_jsonl",
    "read_boundary_trace_csv",
    "write_boundary_trace_csv",
    "read_field_csv",
    "round_floats",
    "dump_json",
]

MAGIC = b"ZKFRAME1"


class FormatError(ValueError):
    pass


def round_floats(obj, digits: int = 12):
    """Recursively round floats to ``digits`` significant digits (JSON-safe)."""
    if isinstance(obj, dict):
        return {str(k): round_floats(v, digits) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round_floats(v, digits) for v in obj]
    if isinstance(obj, np.ndarray):
        return round_floats(obj.tolist(), digits)
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return None
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return float(f"{v:.{digits}g}")
    return obj


def dump_json(obj, path, digits: int = 12) -> None:
    Path(path).write_text(json.dumps(round_floats(obj, digits), indent=2, sort_keys=True) + "\n")


# -- snapshots -----------------------------------------------------------------


def write_snapshots_csv(path, times, x, y, fields) -> None:
    """Rows ``t, x, y, u`` for every snapshot, x varying slower than y."""
    x = np.asarray(x)
    y = np.asarray(y)
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["t", "x", "y", "u"])
        for t, u in zip(times, fields):
            u = np.asarray(u)
            for i, xv in enumerate(x):
                for j, yv in enumerate(y):
                    wr.writerow([f"{t:.12g}", f"{xv:.12g}", f"{yv:.12g}", f"{u[i, j]:.17g}"])


def _read_table(path, columns):
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        try:
            header = [h.strip() for h in next(rd)]
        except StopIteration:
            raise FormatError(f"{path}: empty file") from None
        missing = [c for c in columns if c not in header]
        if missing:
            raise FormatError(f"{path}: missing column(s) {', '.join(missing)}")
        idx = [header.index(c) for c in columns]
        rows = []
        for lineno, row in enumerate(rd, start=2):
            if not row:
                continue
            try:
                rows.append([float(row[i]) for i in idx])
            except (ValueError, IndexError):
                raise FormatError(f"{path}:{lineno}: malformed row {row!r}") from None
    if not rows:
        raise FormatError(f"{path}: no data rows")
    return np.array(rows)


def _to_grid(a, b, v, path):
    ua, ia = np.unique(a, return_inverse=True)
    ub, ib = np.unique(b, return_inverse=True)
    if len(v) != len(ua) * len(ub):
        raise FormatError(f"{path}: data do not form a complete tensor grid")
    out = np.full((len(ua), len(ub)), np.nan)
    out[ia, ib] = v
    if np.isnan(out).any():
        raise FormatError(f"{path}: duplicate or missing grid points")
    return ua, ub, out


def read_snapshots_csv(path):
    """Inverse of :func:`write_snapshots_csv`: ``(times, x, y, fields[t, x, y])``."""
    d = _read_table(path, ["t", "x", "y", "u"])
    times = np.unique(d[:, 0])
    fields = []
    x = y = None
    for t in times:
        sel = d[:, 0] == t
        x, y, u = _to_grid(d[sel, 1], d[sel, 2], d[sel, 3], path)
        fields.append(u)
    return times, x, y, np.array(fields)


def read_field_csv(path):
    """A single field from columns ``x, y, u``; returns ``(x, y, u[x, y])``."""
    d = _read_table(path, ["x", "y", "u"])
    return _to_grid(d[:, 0], d[:, 1], d[:, 2], path)


def write_frames(path, times, x, y, fields, dtype="f8") -> None:
    if dtype not in ("f8", "f4"):
        raise FormatError("frame dtype must be f8 or f4")
    data = np.asarray(fields, dtype="<" + dtype)
    times = np.asarray(times, dtype="<f8")
    x = np.asarray(x, dtype="<f8")
    y = np.asarray(y, dtype="<f8")
    if data.shape != (len(times), len(x), len(y)):
        raise FormatError(f"payload shape {data.shape} does not match axes")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", 3))
        fh.write(struct.pack("<3I", *data.shape))
        fh.write(dtype.ljust(4).encode("ascii"))
        fh.write(times.tobytes())
        fh.write(x.tobytes())
        fh.write(y.tobytes())
        fh.write(np.ascontiguousarray(data).tobytes())


def read_frames(path):
    raw = Path(path).read_bytes()
    if raw[:8] != MAGIC:
        raise FormatError(f"{path}: not a frame file (bad magic)")
    (nd,) = struct.unpack_from("<I", raw, 8)
    if nd != 3:
        raise FormatError(f"{path}: expected 3 dimensions, found {nd}")
    shape = struct.unpack_from("<3I", raw, 12)
    off = 12 + 12
    dtype = raw[off : off + 4].decode("ascii").strip()
    if dtype not in ("f8", "f4"):
        raise FormatError(f"{path}: unknown dtype tag {dtype!r}")
    off += 4
    axes = []
    for n in shape:
        axes.append(np.frombuffer(raw, "<f8", n, off).copy())
        off += 8 * n
    count = int(np.prod(shape))
    if len(raw) - off != count * np.dtype(dtype).itemsize:
        raise FormatError(f"{path}: truncated payload")
    data = np.frombuffer(raw, "<" + dtype, count, off).reshape(shape).copy()
    return axes[0], axes[1], axes[2], data


# -- JSON lines ------------------------------------------------------------------


def write_jsonl(path, records, digits: int = 12) -> None:
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(round_floats(rec, digits), sort_keys=True) + "\n")


def read_jsonl(path) -> list:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


# -- boundary traces ----------------------------------------------------------------


def read_boundary_trace_csv(path, basis: TransverseBasis) -> BoundaryTrace:
    """Boundary trace from columns ``t, y, mu``; the y values must be the basis nodes."""
    d = _read_table(path, ["t", "y", "mu"])
    t, y, vals = _to_grid(d[:, 0], d[:, 1], d[:, 2], path)
    if len(y) != basis.n_nodes or not np.allclose(y, basis.nodes, rtol=0, atol=1e-9 * basis.L):
        raise FormatError(
            f"{path}: y samples do not match the case-{basis.case.value} collocation nodes "
            f"({basis.n_nodes} nodes on (0, {basis.L}))"
        )
    return BoundaryTrace(t, vals, basis)


def write_boundary_trace_csv(path, trace: BoundaryTrace) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["t", "y", "mu"])
        for ti, row in zip(trace.t, trace.values):
            for yv, v in zip(trace.basis.nodes, row):
                wr.writerow([f"{ti:.17g}", f"{yv:.17g}", f"{v:.17g}"])
