"""ASCII field files and run manifests."""
from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .errors import FormatError

FIELD_HEADER = "FSIFIELD 1"


def write_field(path, values) -> Path:
    """One ``value`` or ``vx vy vz`` line per vertex; floats use ``repr`` so reads are bit-exact."""
    vals = np.asarray(values, dtype=float)
    if vals.ndim == 1:
        rows = [repr(v) for v in vals.tolist()]
    elif vals.ndim == 2 and vals.shape[1] == 3:
        rows = [f"{a!r} {b!r} {c!r}" for a, b, c in vals.tolist()]
    else:
        raise ValueError(f"field must have shape (n,) or (n, 3), got {vals.shape}")
    path = Path(path)
    path.write_text("\n".join([FIELD_HEADER, str(len(vals))] + rows) + "\n")
    return path


def read_field(path, n_expected: int | None = None) -> np.ndarray:
    lines = [ln.strip() for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines or lines[0] != FIELD_HEADER:
        raise FormatError(f"{path}: missing {FIELD_HEADER!r} header")
    try:
        n = int(lines[1])
    except (IndexError, ValueError) as exc:
        raise FormatError(f"{path}: bad dof count line") from exc
    body = lines[2:]
    if len(body) != n:
        raise FormatError(f"{path}: header declares {n} values, found {len(body)}")
    if n_expected is not None and n != n_expected:
        raise FormatError(f"{path}: {n} values, mesh has {n_expected} vertices")
    try:
        rows = [[float(t) for t in ln.split()] for ln in body]
    except ValueError as exc:
        raise FormatError(f"{path}: non-numeric entry") from exc
    widths = {len(r) for r in rows}
    if n and widths not in ({1}, {3}):
        raise FormatError(f"{path}: rows must hold 1 or 3 numbers")
    arr = np.array(rows, dtype=float)
    return arr[:, 0] if n and widths == {1} else arr.reshape(n, 3) if n else np.zeros(0)


def vertex_fields(blocks, x) -> tuple:
    """Scatter a solution vector to per-vertex ``phi`` (n,) and ``u`` (n, 3), zero elsewhere."""
    space = blocks.space
    nv = space.mesh.n_vertices
    phi = np.zeros(nv, dtype=np.asarray(x).dtype)
    u = np.zeros((nv, 3), dtype=phi.dtype)
    ph, uu = space.split(np.asarray(x))
    phi[space.fluid_vertices] = ph
    u[space.solid_vertices] = uu
    return phi, u


def sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(out_dir, config_echo: dict, files, version: str, extra: dict | None = None) -> Path:
    """``manifest.json`` with the config echo, package version and a checksum per output file."""
    out_dir = Path(out_dir)
    entries = {str(Path(f).relative_to(out_dir)): sha256(f) for f in sorted(map(Path, files))}
    doc = {"version": version, "config": config_echo, "files": entries}
    if extra:
        doc.update(extra)
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path
