"""Text file formats: MAXW6 field files, coefficient rasters, JSON summaries, VTK and CSV dumps.

MAXW6 layout::

    MAXW6
    n_points 128
    side_length 24
    k 1
    components U1 U2 U3 Ut1 Ut2 Ut3
    <n*n lines of six values, node (i, j) row-major, x index slowest>

Values are written with 17 significant digits so that binary64 data
round-trips exactly.
"""
from __future__ import annotations

import json
import math
import os
from pathlib import Path

import numpy as np

from .grid import Field6, GridSpec

MAGIC = "MAXW6"
COMPONENTS = ("U1", "U2", "U3", "Ut1", "Ut2", "Ut3")
SCHEMA_VERSION = 1


class FieldFileError(ValueError):
    """Malformed field or raster file; ``offset`` is the byte offset of the problem."""

    def __init__(self, path, offset: int, message: str):
        super().__init__(f"{path}: byte {offset}: {message}")
        self.path = str(path)
        self.offset = offset


def _lines_with_offsets(raw: bytes):
    pos = 0
    for line in raw.splitlines(keepends=True):
        yield pos, line
        pos += len(line)


def _header(path, raw: bytes, start: int, keys: list[str]):
    """Parse ``key value`` header lines beginning at byte ``start``; offsets are absolute."""
    values = {}
    it = ((start + off, line) for off, line in _lines_with_offsets(raw[start:]))
    end = start
    for key in keys:
        try:
            off, line = next(it)
        except StopIteration:
            raise FieldFileError(path, len(raw), f"unexpected end of file, expected header field {key!r}")
        parts = line.decode("ascii", "replace").split()
        if not parts or parts[0] != key:
            raise FieldFileError(path, off, f"expected header field {key!r}, found {line[:40]!r}")
        values[key] = (off, parts[1:])
        end = off + len(line)
    return values, end


def _parse_rows(path, raw: bytes, start: int, n_rows: int, width: int) -> np.ndarray:
    body = raw[start:]
    rows = [ln for ln in body.splitlines() if ln.strip()]
    if len(rows) == n_rows and all(len(r.split()) == width for r in rows):
        try:
            return np.array(body.split(), dtype=float).reshape(n_rows, width)
        except ValueError:
            pass
    # slow path: locate the first problem
    count = 0
    for off, line in _lines_with_offsets(body):
        toks = line.split()
        if not toks:
            continue
        if count >= n_rows:
            raise FieldFileError(path, start + off, f"extra data after {n_rows} rows")
        if len(toks) != width:
            raise FieldFileError(path, start + off, f"row {count} has {len(toks)} values, expected {width}")
        col = 0
        for tok in toks:
            col = line.index(tok, col)
            try:
                float(tok)
            except ValueError:
                raise FieldFileError(path, start + off + col, f"invalid number {tok.decode(errors='replace')!r}")
            col += len(tok)
        count += 1
    raise FieldFileError(path, len(raw), f"expected {n_rows} rows, found {count}")


def _number(path, field, cast=float):
    off, parts = field
    if len(parts) != 1:
        raise FieldFileError(path, off, "header field needs exactly one value")
    try:
        return cast(parts[0])
    except ValueError:
        raise FieldFileError(path, off, f"invalid header value {parts[0]!r}")


def write_field6(path, u: Field6, k: float) -> None:
    n = u.grid.n_points
    rows = u.data.reshape(6, n * n).T
    with open(path, "w", newline="\n") as fh:
        fh.write(f"{MAGIC}\n")
        fh.write(f"n_points {n}\n")
        fh.write(f"side_length {float(u.grid.side_length)!r}\n")
        fh.write(f"k {float(k)!r}\n")
        fh.write("components " + " ".join(COMPONENTS) + "\n")
        np.savetxt(fh, rows, fmt="%.17g")


def read_field6(path) -> tuple[Field6, float]:
    """Returns (field, k); raises FieldFileError with a byte offset on malformed input."""
    raw = Path(path).read_bytes()
    first = raw.split(b"\n", 1)[0].strip()
    if first != MAGIC.encode():
        raise FieldFileError(path, 0, f"missing magic string {MAGIC!r}")
    body_start = raw.index(b"\n") + 1 if b"\n" in raw else len(raw)
    hdr, end = _header(path, raw, body_start, ["n_points", "side_length", "k", "components"])
    n = _number(path, hdr["n_points"], int)
    side = _number(path, hdr["side_length"])
    k = _number(path, hdr["k"])
    off, comps = hdr["components"]
    if tuple(comps) != COMPONENTS:
        raise FieldFileError(path, off, f"component order must be {' '.join(COMPONENTS)}")
    try:
        grid = GridSpec(side, n)
    except ValueError as exc:
        raise FieldFileError(path, hdr["n_points"][0], str(exc))
    rows = _parse_rows(path, raw, end, n * n, 6)
    if not np.all(np.isfinite(rows)):
        bad = int(np.argwhere(~np.isfinite(rows))[0][0])
        lines = [(off, ln) for off, ln in _lines_with_offsets(raw[end:]) if ln.strip()]
        raise FieldFileError(path, end + lines[bad][0], f"non-finite value in row {bad}")
    return Field6(grid, rows.T.reshape(6, n, n).copy()), k


def write_raster(path, values: np.ndarray, side_length: float) -> None:
    values = np.asarray(values, float)
    n = values.shape[0]
    with open(path, "w", newline="\n") as fh:
        fh.write(f"{n} {float(side_length)!r}\n")
        np.savetxt(fh, values.reshape(-1, 1), fmt="%.17g")


def read_raster(path) -> tuple[np.ndarray, int, float]:
    """Returns (values (n, n), n_points, side_length)."""
    raw = Path(path).read_bytes()
    head, _, _ = raw.partition(b"\n")
    parts = head.split()
    if len(parts) != 2:
        raise FieldFileError(path, 0, "raster header must be 'n_points side_length'")
    try:
        n = int(parts[0])
        side = float(parts[1])
    except ValueError:
        raise FieldFileError(path, 0, "raster header must be 'n_points side_length'")
    body_start = len(head) + 1
    arr = _parse_rows(path, raw, body_start, n * n, 1)
    return arr.reshape(n, n), n, side


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    return obj


def summary_json(summary: dict) -> str:
    payload = {"schema": SCHEMA_VERSION, **_jsonable(summary)}
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def write_json_summary(path, summary: dict) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(summary_json(summary))


def write_vtk(path, snap) -> None:
    """Legacy ASCII STRUCTURED_POINTS file of a FieldSnapshot (x fastest, then y, then z)."""
    g = snap.grid
    n = g.n_points
    z = np.asarray(snap.z_samples, float)
    dz = float(z[1] - z[0]) if z.size > 1 else 1.0
    if z.size > 2 and np.ptp(np.diff(z)) > 1e-12 * abs(dz):
        raise ValueError("VTK structured points need uniformly spaced z samples")
    x0 = float(g.x[0])
    with open(path, "w", newline="\n") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write(f"travelling wave fields t={float(snap.t)!r}\n")
        fh.write("ASCII\nDATASET STRUCTURED_POINTS\n")
        fh.write(f"DIMENSIONS {n} {n} {z.size}\n")
        fh.write(f"ORIGIN {x0!r} {x0!r} {float(z[0])!r}\n")
        fh.write(f"SPACING {float(g.dx)!r} {float(g.dx)!r} {dz!r}\n")
        fh.write(f"POINT_DATA {n * n * z.size}\n")
        for name in ("E", "B", "D", "H"):
            arr = getattr(snap, name)  # (nz, 3, nx, ny)
            fh.write(f"VECTORS {name} double\n")
            np.savetxt(fh, arr.transpose(0, 3, 2, 1).reshape(-1, 3), fmt="%.10g")
        fh.write("SCALARS energy_density double 1\nLOOKUP_TABLE default\n")
        np.savetxt(fh, snap.energy_density.transpose(0, 2, 1).reshape(-1, 1), fmt="%.10g")


def write_fields_csv(path, snap) -> None:
    """One row per node: x, y, z, E, B, D, H components and the energy density."""
    g = snap.grid
    X, Y = g.mesh
    cols = []
    for iz, z in enumerate(np.atleast_1d(snap.z_samples)):
        block = [X.ravel(), Y.ravel(), np.full(X.size, z)]
        for name in ("E", "B", "D", "H"):
            arr = getattr(snap, name)[iz]
            block += [arr[c].ravel() for c in range(3)]
        block.append(snap.energy_density[iz].ravel())
        cols.append(np.column_stack(block))
    header = "x,y,z," + ",".join(f"{f}{c}" for f in "EBDH" for c in (1, 2, 3)) + ",energy_density"
    np.savetxt(path, np.vstack(cols), delimiter=",", header=header, comments="", fmt="%.10g")


def write_diagnostics_csv(path, history: list[dict]) -> None:
    if not history:
        Path(path).write_text("")
        return
    keys = list(history[0])
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(keys) + "\n")
        for rec in history:
            fh.write(",".join(repr(float(rec[k])) if not isinstance(rec[k], (int, np.integer)) else str(rec[k])
                              for k in keys) + "\n")


def ensure_dir(path) -> Path:
    p = Path(path)
    os.makedirs(p, exist_ok=True)
    return p
