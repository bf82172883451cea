"""Finitely supported lattice sequences under the weight ``exp(r |lambda|^{1/s})``."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy.signal import convolve

from .errors import LatticeMismatch
from .weights import subconv_constant


@dataclass(frozen=True, eq=False)
class LatticeSeq:
    """Sequence on the lattice ``diag(spacing) Z^d`` with finite support.

    ``entries`` maps integer index tuples to complex values; zero entries
    are dropped.
    """

    entries: Mapping[tuple[int, ...], complex]
    spacing: tuple[float, ...] = (1.0,)

    def __post_init__(self):
        d = len(self.spacing)
        clean = {}
        for k, v in self.entries.items():
            key = (int(k),) if np.isscalar(k) else tuple(int(i) for i in k)
            if len(key) != d:
                raise LatticeMismatch(f"index {key} does not match lattice dimension {d}")
            if v != 0:
                clean[key] = complex(v)
        object.__setattr__(self, "entries", clean)
        object.__setattr__(self, "spacing", tuple(float(s) for s in self.spacing))

    @property
    def dim(self) -> int:
        return len(self.spacing)

    @classmethod
    def zero(cls, spacing=(1.0,)) -> "LatticeSeq":
        return cls({}, spacing)

    @classmethod
    def spike(cls, index, value=1.0, spacing=(1.0,)) -> "LatticeSeq":
        return cls({index if not np.isscalar(index) else (index,): value}, spacing)

    @classmethod
    def from_dense(cls, values: np.ndarray, origin, spacing) -> "LatticeSeq":
        """``values[i]`` sits at index ``i + origin`` (componentwise)."""
        values = np.asarray(values)
        origin = np.atleast_1d(origin)
        entries = {
            tuple(int(c) for c in np.array(idx) + origin): values[idx]
            for idx in zip(*np.nonzero(values))
        }
        return cls(entries, spacing)

    def indices(self) -> np.ndarray:
        if not self.entries:
            return np.zeros((0, self.dim), dtype=int)
        return np.array(list(self.entries.keys()), dtype=int)

    def values(self) -> np.ndarray:
        return np.array(list(self.entries.values()), dtype=complex)

    def radii(self) -> np.ndarray:
        """``|lambda|`` of every support point in phase-space units."""
        return np.linalg.norm(self.indices() * np.array(self.spacing), axis=1)

    def support_box(self) -> np.ndarray:
        """Symmetric index half-widths covering the support."""
        idx = self.indices()
        if idx.size == 0:
            return np.zeros(self.dim, dtype=int)
        return np.max(np.abs(idx), axis=0)

    def to_dense(self, half: np.ndarray) -> np.ndarray:
        """Values on the index box ``[-half, half]``."""
        out = np.zeros(tuple(2 * np.asarray(half) + 1), dtype=complex)
        for k, v in self.entries.items():
            out[tuple(np.array(k) + half)] = v
        return out

    def to_json(self) -> dict:
        return {
            "lattice": {"spacing": list(self.spacing)},
            "entries": [
                [list(k) if self.dim > 1 else k[0], v.real, v.imag] for k, v in sorted(self.entries.items())
            ],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "LatticeSeq":
        spacing = tuple(obj.get("lattice", {}).get("spacing", [1.0]))
        entries = {}
        for idx, re, im in obj["entries"]:
            key = tuple(idx) if isinstance(idx, (list, tuple)) else (idx,)
            entries[key] = entries.get(key, 0) + complex(re, im)
        return cls(entries, spacing)


def _check_same(a: LatticeSeq, b: LatticeSeq):
    if not np.allclose(a.spacing, b.spacing, rtol=1e-12, atol=0) or a.dim != b.dim:
        raise LatticeMismatch(f"lattices differ: {a.spacing} vs {b.spacing}")


def weight_grid(half: np.ndarray, spacing, r: float, s: float) -> np.ndarray:
    """``exp(-r |lambda|^{1/s})`` on the index box ``[-half, half]``."""
    axes = [np.arange(-h, h + 1) * d for h, d in zip(half, spacing)]
    mesh = np.meshgrid(*axes, indexing="ij")
    rad = np.sqrt(sum(m**2 for m in mesh))
    return np.exp(-r * rad ** (1.0 / s))


def seq_norm(a: LatticeSeq, r: float, s: float) -> float:
    """``sup_lambda |a_lambda| exp(r |lambda|^{1/s})``."""
    if s <= 0:
        raise ValueError("s must be positive")
    if not a.entries:
        return 0.0
    return float(np.max(np.abs(a.values()) * np.exp(r * a.radii() ** (1.0 / s))))


def seq_convolve(a: LatticeSeq, b: LatticeSeq) -> LatticeSeq:
    _check_same(a, b)
    if not a.entries or not b.entries:
        return LatticeSeq.zero(a.spacing)
    ia, ib = a.indices(), b.indices()
    lo_a, lo_b = ia.min(axis=0), ib.min(axis=0)
    da = np.zeros(tuple(ia.max(axis=0) - lo_a + 1), dtype=complex)
    db = np.zeros(tuple(ib.max(axis=0) - lo_b + 1), dtype=complex)
    for k, v in a.entries.items():
        da[tuple(np.array(k) - lo_a)] = v
    for k, v in b.entries.items():
        db[tuple(np.array(k) - lo_b)] = v
    c = convolve(da, db, method="direct")
    return LatticeSeq.from_dense(c, lo_a + lo_b, a.spacing)


def involution(a: LatticeSeq) -> LatticeSeq:
    """``(a*)_lambda = a_{-lambda}``."""
    return LatticeSeq({tuple(-i for i in k): v for k, v in a.entries.items()}, a.spacing)


def l1_constant(half, spacing, r: float, s: float) -> float:
    """``sum exp(-r |lambda|^{1/s})`` over the index box ``[-half, half]``."""
    return float(np.sum(weight_grid(np.asarray(half), spacing, r, s)))


def subconvolution_constant(half, spacing, r: float, s: float, c: float) -> float:
    """Smallest ``K`` with ``(w * w)(lambda) <= K exp(-c r |lambda|^{1/s})``.

    ``w = exp(-r |.|^{1/s})`` restricted to the index box ``[-half, half]``;
    the maximum runs over the whole support of ``w * w``.
    """
    half = np.asarray(half)
    w = weight_grid(half, spacing, r, s)
    ww = convolve(w, w, method="direct")
    big = weight_grid(2 * half, spacing, c * r, s)
    return float(np.max(ww / big))


def verify_convolution_inequality(a: LatticeSeq, b: LatticeSeq, r: float, s: float) -> dict:
    """Check ``||a*b||_{cr,s} <= K ||a||_{r,s} ||b||_{r,s}`` with the lattice constant ``K``."""
    _check_same(a, b)
    c = subconv_constant(s)
    half = np.maximum(a.support_box(), b.support_box())
    K = subconvolution_constant(half, a.spacing, r, s, c)
    lhs = seq_norm(seq_convolve(a, b), c * r, s)
    rhs = K * seq_norm(a, r, s) * seq_norm(b, r, s)
    ratio = lhs / rhs if rhs > 0 else 0.0
    return {
        "lhs": lhs,
        "rhs": rhs,
        "ratio": ratio,
        "c_used": c,
        "K": K,
        "K_box_sum": l1_constant(half, a.spacing, c * r, s),
        "holds": bool(ratio <= 1.0 + 1e-12),
    }
