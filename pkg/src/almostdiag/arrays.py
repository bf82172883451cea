"""Array files (JSON header plus raw little-endian binary) and CSV plot data.

An array ``name`` is stored as ``name.arr.json``::

    {"dtype": "c128" | "f64", "shape": [...], "order": "row-major", "data": "name.bin"}

next to ``name.bin``.  Complex values are interleaved ``re, im`` doubles.
Extra header keys (lattice metadata, axes) are preserved on read.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .errors import ShapeMismatch

_DTYPES = {"c128": np.dtype("<c16"), "f64": np.dtype("<f8")}
SUFFIX = ".arr.json"


def _stem(path: Path) -> Path:
    name = path.name
    for suf in (SUFFIX, ".json", ".bin", ".arr"):
        if name.endswith(suf):
            return path.with_name(name[: -len(suf)])
    return path


def header_path(path) -> Path:
    """``foo``, ``foo.arr``, ``foo.bin`` or ``foo.arr.json`` -> ``foo.arr.json``."""
    return _stem(Path(path)).with_name(_stem(Path(path)).name + SUFFIX)


def write_array(path, values: np.ndarray, meta: dict | None = None) -> Path:
    """Write ``values`` and return the header path.

    Real arrays are stored as ``f64``; anything complex as ``c128``.
    """
    head = header_path(path)
    stem = _stem(head)
    values = np.asarray(values)
    kind = "c128" if np.iscomplexobj(values) else "f64"
    data = np.ascontiguousarray(values, dtype=_DTYPES[kind])
    bin_path = stem.with_name(stem.name + ".bin")
    head.parent.mkdir(parents=True, exist_ok=True)
    bin_path.write_bytes(data.tobytes(order="C"))
    header = {"dtype": kind, "shape": list(data.shape), "order": "row-major", "data": bin_path.name}
    if meta:
        header.update({k: v for k, v in meta.items() if k not in header})
    head.write_text(json.dumps(header, indent=2, sort_keys=True) + "\n")
    return head


def read_header(path) -> dict:
    head = Path(path)
    if not head.name.endswith(".json"):
        head = header_path(head)
    if not head.exists():
        raise FileNotFoundError(f"array header not found: {head}")
    return json.loads(head.read_text())


def read_array(path) -> np.ndarray:
    """Inverse of :func:`write_array`; the data path is relative to the header."""
    head = Path(path)
    if not head.name.endswith(".json"):
        head = header_path(head)
    header = read_header(head)
    if header.get("order", "row-major") != "row-major":
        raise ShapeMismatch(f"{head}: only row-major arrays are supported")
    try:
        dt = _DTYPES[header["dtype"]]
    except KeyError:
        raise ShapeMismatch(f"{head}: unknown dtype {header.get('dtype')!r}") from None
    bin_path = head.parent / header["data"]
    if not bin_path.exists():
        raise FileNotFoundError(f"array data not found: {bin_path}")
    flat = np.frombuffer(bin_path.read_bytes(), dtype=dt)
    shape = tuple(int(n) for n in header["shape"])
    if flat.size != int(np.prod(shape)):
        raise ShapeMismatch(f"{bin_path}: {flat.size} values for shape {list(shape)}")
    return flat.reshape(shape).astype(dt.newbyteorder("="))


def write_magnitude_csv(path, values: np.ndarray) -> Path:
    """``|values|`` of a 2-D array, one CSV row per array row."""
    values = np.asarray(values)
    if values.ndim != 2:
        raise ShapeMismatch(f"CSV export needs a 2-D array, got shape {values.shape}")
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        for row in np.abs(values):
            w.writerow([repr(float(v)) for v in row])
    return path


def _write_rows(path: Path, header: list[str], rows) -> Path:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) for v in row])
    return path


def envelope_rows(radius, H, fit: dict | None = None) -> np.ndarray:
    """Rows ``(|z|, H, bound)`` sorted by ``|z|``; ``bound`` is ``C exp(-eps |z|^{1/s})``."""
    radius = np.asarray(radius, dtype=float)
    H = np.asarray(H, dtype=float)
    order = np.argsort(radius, kind="stable")
    radius, H = radius[order], H[order]
    if fit and fit.get("epsilon") is not None and fit.get("C") is not None:
        bound = fit["C"] * np.exp(-fit["epsilon"] * radius ** (1.0 / fit["s"]))
    else:
        bound = np.full_like(radius, np.nan)
    return np.column_stack([radius, H, bound]) if radius.size else np.zeros((0, 3))


def emit_plotdata(report: dict, stem) -> list[Path]:
    """CSV files for the plottable parts of a report.

    ``report["envelope"]`` (keys ``radius``, ``H`` and optionally ``fit``)
    gives ``<stem>.envelope.csv`` with columns ``|z|, H, bound``;
    ``report["heatmap"]`` (keys ``x``, ``xi``, ``values``) gives
    ``<stem>.heatmap.csv`` with columns ``x, xi, |V|``.
    """
    stem = Path(stem)
    out = []
    env = report.get("envelope")
    if env is not None:
        rows = envelope_rows(env.get("radius", []), env.get("H", []), env.get("fit"))
        out.append(_write_rows(stem.with_name(stem.name + ".envelope.csv"), ["|z|", "H", "bound"], rows))
    heat = report.get("heatmap")
    if heat is not None:
        V = np.abs(np.asarray(heat["values"]))
        X, XI = np.meshgrid(heat["x"], heat["xi"], indexing="ij")
        rows = np.column_stack([X.ravel(), XI.ravel(), V.ravel()]) if V.size else np.zeros((0, 3))
        out.append(_write_rows(stem.with_name(stem.name + ".heatmap.csv"), ["x", "xi", "|V|"], rows))
    return out
