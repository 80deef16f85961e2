"""File formats.

Binary snapshots are one UTF-8 JSON header line terminated by '\\n', followed by
the field as little-endian row-major float64 (x index slowest).  Density
matrices use the same layout with interleaved real/imag float64 pairs
(numpy '<c16').  Tabular outputs are plain CSV with a header row.
"""
from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

import numpy as np

from .grid import PhaseGrid
from .state import ClassicalWaveFunction
from .transforms import QuantumDensityMatrix, WignerFunction

FORMAT_VERSION = 1


def _write_blob(path, header: dict, data: np.ndarray, dtype: str):
    path = Path(path)
    head = json.dumps(header, sort_keys=True).encode() + b"\n"
    with open(path, "wb") as fh:
        fh.write(head)
        fh.write(np.ascontiguousarray(data, dtype=dtype).tobytes(order="C"))
    return path


def _read_blob(path, dtype: str):
    raw = Path(path).read_bytes()
    cut = raw.index(b"\n")
    header = json.loads(raw[:cut].decode())
    data = np.frombuffer(raw[cut + 1:], dtype=dtype)
    return header, data


def save_snapshot(path, psi: ClassicalWaveFunction, kind: str = "psi_C", **extra) -> Path:
    g = psi.grid
    header = {"format": FORMAT_VERSION, "kind": kind, "nx": g.nx, "np": g.n_p,
              "lx": g.lx, "lp": g.lp, "hbar": g.hbar, "dtype": "<f8", **extra}
    return _write_blob(path, header, psi.values, "<f8")


def load_snapshot(path) -> tuple[ClassicalWaveFunction, dict]:
    header, data = _read_blob(path, "<f8")
    grid = PhaseGrid(header["nx"], header["np"], header["lx"], header["lp"], header["hbar"])
    return ClassicalWaveFunction(grid, data.reshape(grid.shape).copy()), header


def save_density_matrix(path, rho: QuantumDensityMatrix, **extra) -> Path:
    g = rho.grid
    header = {"format": FORMAT_VERSION, "kind": "rho_Q", "nx": g.nx, "np": g.n_p,
              "lx": g.lx, "lp": g.lp, "hbar": g.hbar, "dtype": "<c16", **extra}
    return _write_blob(path, header, rho.values, "<c16")


def load_density_matrix(path) -> QuantumDensityMatrix:
    header, data = _read_blob(path, "<c16")
    grid = PhaseGrid(header["nx"], header["np"], header["lx"], header["lp"], header["hbar"])
    return QuantumDensityMatrix(grid, data.reshape(grid.nx, grid.nx).copy())


def write_csv(path, rows, columns=None) -> Path:
    path = Path(path)
    rows = list(rows)
    if columns is None:
        columns = list(rows[0].keys()) if rows else []
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row.get(c, "")) for c in columns])
    return path


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return int(v)
    return v


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_marginal(path, x, values, name: str = "value") -> Path:
    return write_csv(path, ({"x": a, name: b} for a, b in zip(x, values)), ["x", name])


def write_wigner(path, wf: WignerFunction) -> Path:
    g = wf.grid
    rows = ({"x": g.x[i], "p": g.p[j], "value": wf.values[i, j]}
            for i in range(g.nx) for j in range(g.n_p))
    return write_csv(path, rows, ["x", "p", "value"])


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")
    return path


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_dir, files, extra: dict | None = None) -> Path:
    out_dir = Path(out_dir)
    entries = []
    for f in sorted(set(Path(p) for p in files)):
        entries.append({"file": str(f.relative_to(out_dir)), "sha256": sha256(f), "bytes": f.stat().st_size})
    return write_json(out_dir / "manifest.json", {"files": entries, **(extra or {})})
