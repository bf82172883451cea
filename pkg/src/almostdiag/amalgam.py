"""Wiener amalgam norms built from local suprema over lattice cells."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve
from scipy.special import logsumexp

from .errors import EmptyCell, GridMismatch
from .seqspace import LatticeSeq, seq_norm
from .tfcore import SymbolGrid
from .weights import subconv_constant

_EDGE = 1e-9


@dataclass(frozen=True)
class CellCover:
    """Closed boxes ``lambda + [-h1, h1] x [-h2, h2]`` on ``alpha Z x beta Z``.

    With the default half-widths ``(alpha/2, beta/2)`` the boxes tile the
    plane; neighbouring boxes share their boundary samples.
    """

    alpha: float
    beta: float
    half: tuple[float, float] | None = None

    def __post_init__(self):
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError("cell spacings must be positive")
        if self.half is None:
            object.__setattr__(self, "half", (self.alpha / 2, self.beta / 2))

    @classmethod
    def from_lattice(cls, lattice) -> "CellCover":
        return cls(lattice.alpha, lattice.beta)

    @property
    def spacing(self) -> tuple[float, float]:
        return (self.alpha, self.beta)


def _axis_cells(coords: np.ndarray, step: float, half: float) -> tuple[np.ndarray, list[np.ndarray]]:
    """Cell indices meeting the sampled range and the sample indices of each."""
    lo = int(np.ceil((coords.min() - half) / step - _EDGE))
    hi = int(np.floor((coords.max() + half) / step + _EDGE))
    ks = np.arange(lo, hi + 1)
    members = []
    for k in ks:
        inside = np.abs(coords - k * step) <= half * (1 + _EDGE) + _EDGE * step
        members.append(np.nonzero(inside)[0])
    return ks, members


def _reduce_axis(A: np.ndarray, members: list[np.ndarray], axis: int) -> np.ndarray:
    return np.stack([np.max(np.take(A, m, axis=axis), axis=axis) for m in members], axis=axis)


def local_sup(F: SymbolGrid, cover: CellCover) -> LatticeSeq:
    """``F_lambda = max |F(Y)|`` over samples ``Y`` in the closed cell ``lambda + C``."""
    kx, mx = _axis_cells(F.x, cover.alpha, cover.half[0])
    kl, ml = _axis_cells(F.xi, cover.beta, cover.half[1])
    for ks, ms, name in ((kx, mx, "x"), (kl, ml, "xi")):
        for k, m in zip(ks, ms):
            if m.size == 0:
                raise EmptyCell(f"cell {k} along {name} contains no grid point")
    A = np.abs(F.samples)
    A = _reduce_axis(A, mx, 0)
    A = _reduce_axis(A, ml, 1)
    return LatticeSeq.from_dense(A, (kx[0], kl[0]), cover.spacing)


def wiener_norm(F: SymbolGrid, cover: CellCover, r: float, s: float) -> float:
    """``|| (F_lambda) ||_{r,s}``."""
    return seq_norm(local_sup(F, cover), r, s)


def cell_count(F: SymbolGrid, cover: CellCover) -> int:
    """Largest number of samples in one closed cell."""
    _, mx = _axis_cells(F.x, cover.alpha, cover.half[0])
    _, ml = _axis_cells(F.xi, cover.beta, cover.half[1])
    return max(m.size for m in mx) * max(m.size for m in ml)


def convolve(F: SymbolGrid, G: SymbolGrid) -> SymbolGrid:
    """Zero-padded ``(F*G)(Y) = sum_Z F(Y-Z) G(Z) dZ`` on the extended grid."""
    if not np.isclose(F.dx, G.dx, rtol=1e-12) or not np.isclose(F.dxi, G.dxi, rtol=1e-12):
        raise GridMismatch("F and G must share sample spacings")
    for ax_f, ax_g, d in ((F.x, G.x, F.dx), (F.xi, G.xi, F.dxi)):
        off = (ax_f[0] + ax_g[0]) / d
        if abs(off - round(off)) > 1e-9:
            raise GridMismatch("grids are not aligned to a common lattice")
    C = F.cell * fftconvolve(F.samples, G.samples)
    x = F.x[0] + G.x[0] + F.dx * np.arange(C.shape[0])
    xi = F.xi[0] + G.xi[0] + F.dxi * np.arange(C.shape[1])
    return SymbolGrid(x, xi, C)


def _log_w(idx: np.ndarray, spacing, r: float, s: float) -> np.ndarray:
    return -r * np.linalg.norm(idx * np.asarray(spacing), axis=-1) ** (1.0 / s)


def wiener_convolution_constant(
    cells_f: np.ndarray, cells_g: np.ndarray, cells_out: np.ndarray, spacing, r: float, s: float, c: float,
    n_cell: int, area: float,
) -> float:
    """``K'`` such that ``||F*G||_{cr} <= K' ||F||_r ||G||_r`` on these supports.

    For ``Y`` in cell ``lambda`` and ``Z`` in cell ``nu`` the point ``Y - Z``
    lies in one of the nine cells ``lambda - nu + e``, ``e`` in ``{-1,0,1}^2``,
    so each output cell is bounded by
    ``n_cell * area * sum_nu w(nu) max_e w(lambda - nu + e)``.
    """
    lg = _log_w(cells_g, spacing, r, s)
    offsets = np.array([(i, j) for i in (-1, 0, 1) for j in (-1, 0, 1)])
    worst = -np.inf
    for chunk in np.array_split(cells_out, max(1, len(cells_out) // 256)):
        diff = chunk[:, None, :] - cells_g[None, :, :]
        lf = np.max(
            np.stack([_log_w(diff + e, spacing, r, s) for e in offsets], axis=0), axis=0
        )
        total = logsumexp(lf + lg[None, :], axis=1) - _log_w(chunk, spacing, c * r, s)
        worst = max(worst, float(np.max(total)))
    return float(n_cell * area * np.exp(worst))


def verify_wiener_convolution(F: SymbolGrid, G: SymbolGrid, cover: CellCover, r: float, s: float) -> dict:
    """``||F*G||_{W, cr} <= K' ||F||_{W, r} ||G||_{W, r}`` with materialized ``K'``."""
    c = subconv_constant(s)
    FG = convolve(F, G)
    lhs = wiener_norm(FG, cover, c * r, s)
    nf, ng = wiener_norm(F, cover, r, s), wiener_norm(G, cover, r, s)
    out = local_sup(FG, cover)
    cells_out = _cell_box(FG, cover)
    K = wiener_convolution_constant(
        _cell_box(F, cover), _cell_box(G, cover), cells_out, cover.spacing, r, s, c,
        max(cell_count(F, cover), cell_count(G, cover)), F.cell,
    )
    rhs = K * nf * ng
    ratio = lhs / rhs if rhs > 0 else 0.0
    return {
        "lhs": lhs,
        "rhs": rhs,
        "ratio": ratio,
        "K": K,
        "c_used": c,
        "norm_F": nf,
        "norm_G": ng,
        "cells": len(out.entries),
        "holds": bool(ratio <= 1.0 + 1e-12),
    }


def _cell_box(F: SymbolGrid, cover: CellCover) -> np.ndarray:
    kx, _ = _axis_cells(F.x, cover.alpha, cover.half[0])
    kl, _ = _axis_cells(F.xi, cover.beta, cover.half[1])
    K, L = np.meshgrid(kx, kl, indexing="ij")
    return np.stack([K.ravel(), L.ravel()], axis=1)


def l1_embedding_constant(cells: np.ndarray, spacing, r: float, s: float) -> float:
    """``sum_lambda exp(-r |lambda|^{1/s})`` so that ``sum F_lambda <= K ||F||_W``."""
    return float(np.exp(logsumexp(_log_w(cells, spacing, r, s))))
