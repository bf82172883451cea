"""
Calibrated discrete model of the time-frequency plane.

Signals live on a centred grid ``x_j = (j - N/2) * delta`` with the unitary
Fourier convention ``f^(xi) = int f(x) exp(-2 pi i x xi) dx``.  All shifts are
cyclic; continuum fidelity comes from using functions that are negligible at
the edge of the box.

Phase-space arrays (symbols, Wigner distributions, STFT windows over R^2) are
held in :class:`SymbolGrid`.  The Weyl layout samples ``x`` at half spacing
(``2N`` points) so that the midpoints ``(x_j + y_k)/2`` are always samples.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .errors import OffGridShift, RangeExceeded, ShapeMismatch, ZeroWindow

_ON_GRID_TOL = 1e-9


@dataclass(frozen=True)
class Grid:
    """Centred sampling grid with ``N`` points spaced ``delta`` apart."""

    N: int
    delta: float

    def __post_init__(self):
        if self.N <= 0 or self.N % 2:
            raise ValueError(f"N must be a positive even integer, got {self.N}")
        if not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta}")

    @classmethod
    def square(cls, N: int) -> "Grid":
        """Grid whose time and frequency spacings coincide (delta**2 * N == 1)."""
        return cls(N, 1.0 / np.sqrt(N))

    @property
    def length(self) -> float:
        return self.N * self.delta

    @property
    def dfreq(self) -> float:
        return 1.0 / (self.N * self.delta)

    @property
    def points(self) -> np.ndarray:
        return (np.arange(self.N) - self.N // 2) * self.delta

    @property
    def freqs(self) -> np.ndarray:
        return (np.arange(self.N) - self.N // 2) * self.dfreq

    def dual(self) -> "Grid":
        """The frequency grid, itself a :class:`Grid`."""
        return Grid(self.N, self.dfreq)

    def doubled(self) -> "Grid":
        """Same spacing, twice the box."""
        return Grid(2 * self.N, self.delta)

    def steps(self, x: float) -> int:
        """Integer number of time steps in ``x``; raises if ``x`` is off-grid."""
        return _steps(x, self.delta)

    def freq_steps(self, xi: float) -> int:
        return _steps(xi, self.dfreq)

    def index(self, x: float) -> int:
        j = self.steps(x) + self.N // 2
        if not 0 <= j < self.N:
            raise RangeExceeded(f"x={x} lies outside the sampled box")
        return j

    def freq_index(self, xi: float) -> int:
        k = self.freq_steps(xi) + self.N // 2
        if not 0 <= k < self.N:
            raise RangeExceeded(f"xi={xi} lies outside the sampled band")
        return k

    def acceptance_box_ok(self) -> bool:
        """Box and band both reach |.| >= 6, where e^{-pi x^2} < 1e-40."""
        return self.length / 2 >= 6 and 1 / (2 * self.delta) >= 6


def _steps(value: float, spacing: float) -> int:
    q = value / spacing
    n = int(round(q))
    if abs(q - n) > _ON_GRID_TOL * max(1.0, abs(q)):
        raise OffGridShift(f"{value} is not a multiple of the spacing {spacing}")
    return n


class PhasePoint(NamedTuple):
    x: float
    xi: float


@dataclass(frozen=True, eq=False)
class SampledSignal:
    grid: Grid
    samples: np.ndarray

    def __post_init__(self):
        s = np.array(self.samples, dtype=complex)
        if s.shape != (self.grid.N,):
            raise ShapeMismatch(f"expected {self.grid.N} samples, got shape {s.shape}")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @classmethod
    def from_function(cls, grid: Grid, func: Callable[[np.ndarray], np.ndarray]) -> "SampledSignal":
        return cls(grid, func(grid.points))

    @classmethod
    def zeros(cls, grid: Grid) -> "SampledSignal":
        return cls(grid, np.zeros(grid.N))

    def norm(self) -> float:
        return float(np.sqrt(self.grid.delta * np.sum(np.abs(self.samples) ** 2)))

    def inner(self, other: "SampledSignal") -> complex:
        """``<self, other>``, linear in the first slot."""
        _same_grid(self, other)
        return complex(self.grid.delta * np.vdot(other.samples, self.samples))

    def reflected(self) -> "SampledSignal":
        """``g*(x) = g(-x)`` on the cyclic grid."""
        return SampledSignal(self.grid, np.roll(self.samples[::-1], 1))

    def __add__(self, other):
        _same_grid(self, other)
        return SampledSignal(self.grid, self.samples + other.samples)

    def __sub__(self, other):
        _same_grid(self, other)
        return SampledSignal(self.grid, self.samples - other.samples)

    def __mul__(self, c):
        return SampledSignal(self.grid, self.samples * c)

    __rmul__ = __mul__


def _same_grid(f: SampledSignal, g: SampledSignal):
    from .errors import GridMismatch

    if f.grid != g.grid:
        raise GridMismatch(f"grids differ: {f.grid} vs {g.grid}")


@dataclass(frozen=True)
class TFGrid:
    """Product of a time axis and a frequency axis, each a :class:`Grid`.

    Time points must be multiples of the signal spacing and frequency points
    multiples of the signal's frequency spacing.
    """

    time: Grid
    freq: Grid

    @classmethod
    def full(cls, grid: Grid) -> "TFGrid":
        return cls(grid, grid.dual())

    @classmethod
    def strided(cls, grid: Grid, time_stride: int = 1, freq_stride: int = 1) -> "TFGrid":
        if grid.N % time_stride or grid.N % freq_stride:
            raise ValueError("strides must divide N")
        return cls(
            Grid(grid.N // time_stride, grid.delta * time_stride),
            Grid(grid.N // freq_stride, grid.dfreq * freq_stride),
        )

    @classmethod
    def central(cls, grid: Grid, shrink: int = 2) -> "TFGrid":
        """Full resolution on the central ``1/shrink`` of the box and band."""
        if grid.N % (2 * shrink):
            raise ValueError("shrink must leave an even point count")
        return cls(Grid(grid.N // shrink, grid.delta), Grid(grid.N // shrink, grid.dfreq))

    @property
    def spacing(self) -> tuple[float, float]:
        return self.time.delta, self.freq.delta

    def indices(self, grid: Grid) -> tuple[np.ndarray, np.ndarray]:
        """Indices of the tf points on the signal grid / its frequency grid."""
        ti = np.array([grid.index(x) for x in self.time.points])
        fi = np.array([grid.freq_index(xi) for xi in self.freq.points])
        return ti, fi


@dataclass(frozen=True, eq=False)
class SymbolGrid:
    """Samples of a function on a phase-space grid.

    ``x`` and ``xi`` are centred coordinate vectors of even length:
    ``x[i] = (i - len(x)/2) * dx``.  ``grid`` is the signal grid this layout
    was built for (Weyl layout) or ``None`` for free-standing phase-space
    arrays.
    """

    x: np.ndarray
    xi: np.ndarray
    samples: np.ndarray
    grid: Grid | None = field(default=None)

    def __post_init__(self):
        s = np.array(self.samples, dtype=complex)
        if s.shape != (len(self.x), len(self.xi)):
            raise ShapeMismatch(f"samples {s.shape} do not match axes ({len(self.x)}, {len(self.xi)})")
        if not np.all(np.isfinite(s)):
            raise ValueError("symbol samples must be finite")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @staticmethod
    def weyl_axes(grid: Grid) -> tuple[np.ndarray, np.ndarray]:
        x = (np.arange(2 * grid.N) - grid.N) * (grid.delta / 2)
        return x, grid.freqs

    @classmethod
    def for_weyl(cls, grid: Grid, func: Callable | None = None, samples=None) -> "SymbolGrid":
        """Weyl layout: ``2N`` midpoints in ``x`` times ``N`` frequencies."""
        x, xi = cls.weyl_axes(grid)
        if samples is None:
            X, XI = np.meshgrid(x, xi, indexing="ij")
            samples = np.broadcast_to(func(X, XI), X.shape)
        return cls(x, xi, samples, grid)

    @classmethod
    def square(cls, n: int, func: Callable | None = None, samples=None, d: float | None = None) -> "SymbolGrid":
        d = 1.0 / np.sqrt(n) if d is None else d
        ax = (np.arange(n) - n // 2) * d
        if samples is None:
            X, XI = np.meshgrid(ax, ax, indexing="ij")
            samples = np.broadcast_to(func(X, XI), X.shape)
        return cls(ax, ax.copy(), samples)

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def dxi(self) -> float:
        return float(self.xi[1] - self.xi[0])

    @property
    def cell(self) -> float:
        return self.dx * self.dxi

    @property
    def shape(self) -> tuple[int, int]:
        return self.samples.shape

    def norm(self) -> float:
        return float(np.sqrt(self.cell * np.sum(np.abs(self.samples) ** 2)))

    def inner(self, other: "SymbolGrid") -> complex:
        if self.shape != other.shape:
            raise ShapeMismatch("symbol grids differ in shape")
        return complex(self.cell * np.vdot(other.samples, self.samples))

    def same_layout(self, other: "SymbolGrid") -> bool:
        return (
            self.shape == other.shape
            and np.allclose(self.x, other.x, rtol=0, atol=1e-12)
            and np.allclose(self.xi, other.xi, rtol=0, atol=1e-12)
        )

    def dual_axes(self) -> tuple[np.ndarray, np.ndarray]:
        """Frequencies produced by :func:`fourier2` on this layout."""
        n1, n2 = self.shape
        return (
            (np.arange(n1) - n1 // 2) / (n1 * self.dx),
            (np.arange(n2) - n2 // 2) / (n2 * self.dxi),
        )


# -- one-dimensional transforms ------------------------------------------------


def _cfft(v: np.ndarray, axis: int = -1) -> np.ndarray:
    return np.fft.fftshift(np.fft.fft(np.fft.ifftshift(v, axes=axis), axis=axis), axes=axis)


def _cifft(v: np.ndarray, axis: int = -1) -> np.ndarray:
    return np.fft.fftshift(np.fft.ifft(np.fft.ifftshift(v, axes=axis), axis=axis), axes=axis)


def fourier(f: SampledSignal) -> SampledSignal:
    """Samples of ``f^`` on the dual grid ``xi_k = (k - N/2)/(N delta)``."""
    g = f.grid
    return SampledSignal(g.dual(), g.delta * _cfft(f.samples))


def ifourier(fh: SampledSignal) -> SampledSignal:
    """Inverse of :func:`fourier`; ``fh`` lives on the frequency grid."""
    g = fh.grid
    return SampledSignal(g.dual(), g.N * g.delta * _cifft(fh.samples))


def modulation(grid: Grid, xi: float) -> np.ndarray:
    k = grid.freq_steps(xi)
    j = np.arange(grid.N) - grid.N // 2
    return np.exp(2j * np.pi * ((j * k) % grid.N) / grid.N)


def tf_shift(g: SampledSignal, Z: PhasePoint | Sequence[float]) -> SampledSignal:
    """``pi(Z) g (t) = exp(2 pi i t xi) g(t - x)`` with cyclic translation.

    Both components of ``Z`` must sit on the grid (``x`` on the time lattice,
    ``xi`` on the frequency lattice) so that the periodic model is exact.
    """
    x, xi = Z
    m = g.grid.steps(x)
    return SampledSignal(g.grid, modulation(g.grid, xi) * np.roll(g.samples, m))


def stft(f: SampledSignal, g: SampledSignal, tf: TFGrid | None = None) -> np.ndarray:
    """``V_g f(x, xi)`` on ``tf``; rows are time points, columns frequencies."""
    _same_grid(f, g)
    grid = f.grid
    if not np.any(g.samples):
        raise ZeroWindow("window is identically zero")
    tf = TFGrid.full(grid) if tf is None else tf
    ti, fi = tf.indices(grid)
    shifts = ti - grid.N // 2
    rows = f.samples[None, :] * np.conj(
        np.stack([np.roll(g.samples, m) for m in shifts])
    )
    return grid.delta * _cfft(rows, axis=1)[:, fi]


def wigner_symbol(f: SampledSignal, g: SampledSignal) -> SymbolGrid:
    """Cross-Wigner distribution ``W(f, g)`` on the Weyl layout.

    ``W(f,g)(x, xi) = int f(x + t/2) conj(g(x - t/2)) exp(-2 pi i xi t) dt``,
    discretised over index pairs ``(p, q)`` with ``x_p + x_q = 2x``.  Pairs
    are not wrapped, so the result is exactly the quadrature dual of the
    Weyl kernel.
    """
    _same_grid(f, g)
    grid = f.grid
    N = grid.N
    P, Q = np.meshgrid(np.arange(N), np.arange(N), indexing="ij")
    sign = np.where((P - Q) % 2, -1.0, 1.0)
    val = (f.samples[:, None] * np.conj(g.samples)[None, :] * sign).ravel()
    lin = ((P + Q) * N + (P - Q) % N).ravel()
    C = np.bincount(lin, weights=val.real, minlength=2 * N * N) + 1j * np.bincount(
        lin, weights=val.imag, minlength=2 * N * N
    )
    C = C.reshape(2 * N, N)
    W = 2 * grid.delta * np.fft.fft(C, axis=1)
    return SymbolGrid.for_weyl(grid, samples=W)


def wigner(f: SampledSignal, g: SampledSignal, tf: TFGrid | None = None) -> np.ndarray:
    """``W(f, g)`` restricted to the points of ``tf``.

    Integer-grid rows have period ``1/(2 delta)`` in ``xi``; functions whose
    spectrum leaves ``|xi| < 1/(4 delta)`` show aliased copies.
    """
    grid = f.grid
    tf = TFGrid.full(grid) if tf is None else tf
    ti, fi = tf.indices(grid)
    W = wigner_symbol(f, g).samples
    return W[np.ix_(2 * ti, fi)]


def wigner_stft_relation_check(f: SampledSignal, g: SampledSignal, tf: TFGrid) -> float:
    """Max of ``|W(f,g)(x,xi) - 2 exp(4 pi i x xi) V_{g*} f(2x, 2xi)|`` over ``tf``."""
    grid = f.grid
    doubled = TFGrid(Grid(tf.time.N, 2 * tf.time.delta), Grid(tf.freq.N, 2 * tf.freq.delta))
    try:
        doubled.indices(grid)
    except RangeExceeded as exc:
        raise RangeExceeded(f"doubled points leave the sampled box: {exc}") from exc
    W = wigner(f, g, tf)
    if not np.any(g.samples):
        return float(np.max(np.abs(W)))
    V = stft(f, g.reflected(), doubled)
    X, XI = np.meshgrid(tf.time.points, tf.freq.points, indexing="ij")
    rhs = 2 * np.exp(4j * np.pi * X * XI) * V
    return float(np.max(np.abs(W - rhs)))


# -- phase-space transforms ------------------------------------------------------


def fourier2(F: SymbolGrid) -> np.ndarray:
    """``int F(z) exp(-2 pi i z . Xi) dz`` on :meth:`SymbolGrid.dual_axes`."""
    h = np.fft.ifftshift(F.samples)
    return F.cell * np.fft.fftshift(np.fft.fft2(h))


def _shifted_window(Phi: np.ndarray, sx: int, sl: int) -> np.ndarray:
    """``Phi(z - Z)``: zero-filled shift by ``sx`` rows, cyclic by ``sl`` columns."""
    out = np.zeros_like(Phi)
    n1 = Phi.shape[0]
    if sx >= 0:
        out[sx:] = Phi[: n1 - sx]
    else:
        out[: n1 + sx] = Phi[-sx:]
    return np.roll(out, sl, axis=1)


def stft_at_center(a: SymbolGrid, Phi: SymbolGrid, ix: int, il: int) -> np.ndarray:
    """``V_Phi a(Z, .)`` for the centre ``Z = (a.x[ix], a.xi[il])`` on the dual grid."""
    n1, n2 = a.shape
    h = a.samples * np.conj(_shifted_window(Phi.samples, ix - n1 // 2, il - n2 // 2))
    return a.cell * np.fft.fftshift(np.fft.fft2(np.fft.ifftshift(h)))


@dataclass(frozen=True, eq=False)
class BigSTFT:
    """Samples of ``V_Phi a(X, Xi)``; ``values[cx, cxi, k1, k2]``."""

    X: np.ndarray
    XI: np.ndarray
    Xi1: np.ndarray
    Xi2: np.ndarray
    values: np.ndarray

    def magnitude_sup(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0


def center_indices(n: int, stride: int, limit: int | None = None) -> np.ndarray:
    """Centre indices ``n/2 + k*stride`` within ``[0, n)`` and ``|k*stride| <= limit``."""
    c = n // 2
    limit = c if limit is None else min(limit, c)
    k = np.arange(-(limit // stride), limit // stride + 1) * stride
    idx = c + k
    return idx[(idx >= 0) & (idx < n)]


def big_stft(
    a: SymbolGrid,
    Phi: SymbolGrid,
    x_stride: int = 1,
    xi_stride: int = 1,
    x_limit: int | None = None,
    xi_limit: int | None = None,
) -> BigSTFT:
    """STFT over R^2 of the phase-space function ``a`` with window ``Phi``.

    Window centres run over the symbol grid with the given strides (and
    optional index radius about the origin); for each centre one 2-D fast
    transform yields every frequency ``Xi`` on the dual grid.
    """
    if not a.same_layout(Phi):
        raise ShapeMismatch("a and Phi must share the phase-space grid")
    if not np.any(Phi.samples):
        raise ZeroWindow("window is identically zero")
    n1, n2 = a.shape
    cx = center_indices(n1, x_stride, x_limit)
    cl = center_indices(n2, xi_stride, xi_limit)
    vals = np.empty((len(cx), len(cl), n1, n2), dtype=complex)
    for p, ix in enumerate(cx):
        for q, il in enumerate(cl):
            vals[p, q] = stft_at_center(a, Phi, ix, il)
    Xi1, Xi2 = a.dual_axes()
    return BigSTFT(a.x[cx], a.xi[cl], Xi1, Xi2, vals)


def mod_norm(
    a: SymbolGrid,
    Phi: SymbolGrid,
    r: float,
    s: float,
    x_stride: int = 8,
    xi_stride: int = 8,
    floor: float = 1e-14,
) -> float:
    """``sup |V_Phi a(X, Xi)| exp(r |Xi|^{1/s})`` over the sampled centres.

    Values below ``floor`` times the largest one are round-off and are
    skipped; the weight would otherwise blow them up.
    """
    if s <= 0:
        raise ValueError("s must be positive")
    if not np.any(a.samples):
        return 0.0
    B = big_stft(a, Phi, x_stride, xi_stride)
    X1, X2 = np.meshgrid(B.Xi1, B.Xi2, indexing="ij")
    G = np.max(np.abs(B.values), axis=(0, 1))
    pos = G > floor * G.max()
    # in log space: the weight may overflow where G underflows
    logs = np.log(G[pos]) + r * np.hypot(X1, X2)[pos] ** (1.0 / s)
    return float(np.exp(np.max(logs)))
