"""Closed-form windows and symbols with the analytic metadata the checks rely on.

Symbols are sympy expressions in ``(x, xi)``; derivatives needed by the
seminorm checks come from these expressions, never from grid data.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
import sympy as sp

from .errors import NotInCatalog
from .tfcore import Grid, SampledSignal, SymbolGrid
from .weights import WeightParams

X, XI = sp.symbols("x xi", real=True)
T = sp.Symbol("t", real=True)


@dataclass(frozen=True)
class WindowEntry:
    id: str
    expr: sp.Expr
    unit_norm: bool
    note: str = ""

    @cached_property
    def func(self):
        return sp.lambdify(T, self.expr, "numpy")

    def sample(self, grid: Grid, center: float = 0.0, width: float = 1.0) -> SampledSignal:
        """Samples of ``w((t - center)/sqrt(width)) / width^{1/4}`` (norm kept)."""
        t = (grid.points - center) / np.sqrt(width)
        vals = np.broadcast_to(self.func(t), t.shape) / width**0.25
        return SampledSignal(grid, np.asarray(vals, dtype=complex))

    def metadata(self) -> dict:
        return {"id": self.id, "kind": "window", "formula": str(self.expr), "unit_norm": self.unit_norm, "note": self.note}


@dataclass(frozen=True)
class SymbolEntry:
    """A phase-space symbol and what is known about it analytically.

    ``s_known`` is the Gevrey order certified by hand (``None`` when the
    symbol is not of Gevrey type with a weight from the family), ``m`` the
    weight in the derivative bound and ``C_known`` its geometric constant.
    """

    id: str
    expr: sp.Expr
    s_known: float | None
    m: WeightParams = field(default_factory=WeightParams)
    C_known: float | None = None
    real: bool = True
    note: str = ""

    @cached_property
    def func(self):
        return sp.lambdify((X, XI), self.expr, "numpy")

    def __call__(self, x, xi) -> np.ndarray:
        x, xi = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(xi, dtype=float))
        return np.asarray(np.broadcast_to(self.func(x, xi), x.shape), dtype=complex)

    def on_weyl_grid(self, grid: Grid) -> SymbolGrid:
        return SymbolGrid.for_weyl(grid, self)

    def derivative(self, nx: int, nxi: int) -> sp.Expr:
        return sp.diff(self.expr, X, nx, XI, nxi) if nx or nxi else self.expr

    def derivative_func(self, nx: int, nxi: int):
        d = self.derivative(nx, nxi)
        f = sp.lambdify((X, XI), d, "numpy")

        def call(x, xi):
            x, xi = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(xi, dtype=float))
            return np.asarray(np.broadcast_to(f(x, xi), x.shape), dtype=complex)

        return call

    @property
    def gevrey(self) -> bool:
        return self.s_known is not None

    def metadata(self) -> dict:
        return {
            "id": self.id,
            "kind": "symbol",
            "formula": str(self.expr),
            "s_known": self.s_known,
            "m": self.m.as_list(),
            "C_known": self.C_known,
            "real": self.real,
            "note": self.note,
        }


_pi = sp.pi

WINDOWS: dict[str, WindowEntry] = {
    "gaussian": WindowEntry("gaussian", 2 ** sp.Rational(1, 4) * sp.exp(-_pi * T**2), True),
    "gaussian_pi": WindowEntry("gaussian_pi", sp.exp(-_pi * T**2), False, "e^{-pi t^2}, norm 2^{-1/4}"),
    "hermite1": WindowEntry(
        "hermite1", 2 ** sp.Rational(5, 4) * sp.sqrt(_pi) * T * sp.exp(-_pi * T**2), True, "first Hermite function"
    ),
}

SYMBOLS: dict[str, SymbolEntry] = {
    "constant": SymbolEntry("constant", sp.Integer(1), 0.5, C_known=1.0, note="identity operator"),
    "cosx": SymbolEntry("cosx", sp.cos(2 * _pi * X), 1.0, C_known=float(2 * np.pi), note="|d^k a| <= (2 pi)^k"),
    "gaussian2d": SymbolEntry(
        "gaussian2d", sp.exp(-_pi * (X**2 + XI**2)), 0.5, C_known=float(2 * np.sqrt(np.pi)),
        note="Hermite bound |d^k e^{-pi u^2}| <= (2 sqrt(pi))^k sqrt(k!) per axis",
    ),
    "chirp": SymbolEntry(
        "chirp", sp.exp(2 * sp.I * _pi * X * XI), None, real=False,
        note="unimodular chirp; STFT does not decay along the rotated frequency",
    ),
    "growing": SymbolEntry(
        "growing", sp.exp((X**2 + XI**2) / 8), None, note="Gaussian growth, outside every weighted class in use"
    ),
    "x": SymbolEntry("x", X, None, note="multiplication by x"),
    "xi": SymbolEntry("xi", XI, None, note="Fourier multiplier by xi"),
}

DEFAULT_SYMBOLS = ("constant", "cosx", "gaussian2d")


def window(spec: str) -> WindowEntry:
    try:
        return WINDOWS[spec]
    except KeyError:
        raise NotInCatalog(f"unknown window {spec!r}; known: {sorted(WINDOWS)}") from None


def symbol(spec: str) -> SymbolEntry:
    try:
        return SYMBOLS[spec]
    except KeyError:
        raise NotInCatalog(f"unknown symbol {spec!r}; known: {sorted(SYMBOLS)}") from None


def load_window(spec: str, grid: Grid) -> tuple[SampledSignal, dict]:
    """Catalog id or ``file:<path>`` (array file with N complex samples)."""
    if spec.startswith("file:"):
        from .arrays import read_array

        path = Path(spec[5:])
        data = read_array(path).reshape(-1)
        if data.size != grid.N:
            from .errors import ShapeMismatch

            raise ShapeMismatch(f"{path}: window has {data.size} samples, grid has {grid.N}")
        return SampledSignal(grid, data), {"id": spec, "kind": "window", "source": str(path)}
    entry = window(spec)
    return entry.sample(grid), entry.metadata()


def load_symbol(spec: str, grid: Grid) -> tuple[SymbolGrid, dict, SymbolEntry | None]:
    """Catalog id or ``file:<path>`` holding a ``(2N, N)`` Weyl-layout array."""
    if spec.startswith("file:"):
        from .arrays import read_array

        path = Path(spec[5:])
        data = read_array(path)
        return SymbolGrid.for_weyl(grid, samples=data), {"id": spec, "kind": "symbol", "source": str(path)}, None
    entry = symbol(spec)
    return entry.on_weyl_grid(grid), entry.metadata(), entry
