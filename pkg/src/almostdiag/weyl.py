"""Weyl quantization on the sampled grid, Gabor matrices and the magic formula."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import GridMismatch, MidpointUnrepresentable, ShapeMismatch
from .frames import Lattice, shifted_windows
from .tfcore import (
    Grid,
    PhasePoint,
    SampledSignal,
    SymbolGrid,
    stft_at_center,
    tf_shift,
    wigner_symbol,
)


def _check_weyl_layout(a: SymbolGrid, grid: Grid | None = None):
    if a.grid is None:
        raise ShapeMismatch("symbol is not on a Weyl layout (no signal grid attached)")
    if a.shape != (2 * a.grid.N, a.grid.N):
        raise ShapeMismatch(f"Weyl layout must be (2N, N), got {a.shape}")
    if grid is not None and grid != a.grid:
        raise ShapeMismatch(f"symbol grid {a.grid} does not match signal grid {grid}")


def weyl_kernel(a: SymbolGrid) -> np.ndarray:
    """Kernel ``K`` with ``a^w f = delta * K @ f``.

    ``K[j, k] = int a((x_j + x_k)/2, xi) exp(2 pi i (x_j - x_k) xi) dxi``,
    summed over the frequency grid.  One inverse FFT per midpoint row gives
    every difference at once; the midpoint row is ``j + k`` on the doubled
    grid.
    """
    _check_weyl_layout(a)
    grid = a.grid
    N = grid.N
    n = np.arange(N)
    # A[i, n] = dxi * sum_l a(x'_i, xi_l) exp(2 pi i n delta xi_l)
    A = (N * grid.dfreq) * np.fft.ifft(a.samples, axis=1) * np.where(n % 2, -1.0, 1.0)
    J, K = np.meshgrid(n, n, indexing="ij")
    return A[J + K, (J - K) % N]


def weyl_apply(a: SymbolGrid, f: SampledSignal, kernel: np.ndarray | None = None) -> SampledSignal:
    _check_weyl_layout(a, f.grid)
    K = weyl_kernel(a) if kernel is None else kernel
    return SampledSignal(f.grid, f.grid.delta * (K @ f.samples))


def weak_form_check(a: SymbolGrid, f: SampledSignal, g: SampledSignal) -> float:
    """Relative gap between ``<a^w f, g>`` and ``<a, W(g, f)>``."""
    _check_weyl_layout(a, f.grid)
    lhs = weyl_apply(a, f).inner(g)
    rhs = a.inner(wigner_symbol(g, f))
    scale = a.norm() * f.norm() * g.norm()
    if scale == 0:
        return abs(lhs - rhs)
    return abs(lhs - rhs) / scale


@dataclass(frozen=True, eq=False)
class GaborMatrix:
    """``entries[l, m] = <a^w pi(mu_m) g, pi(lambda_l) gamma>``."""

    lattice: Lattice
    entries: np.ndarray
    window_id: str = "custom"
    symbol_id: str = "custom"
    meta: dict = field(default_factory=dict)

    def hermitian_defect(self) -> float:
        return float(np.max(np.abs(self.entries - self.entries.conj().T)))


def gabor_matrix(
    a: SymbolGrid,
    g: SampledSignal,
    lattice: Lattice,
    gamma: SampledSignal | None = None,
    window_id: str = "custom",
    symbol_id: str = "custom",
) -> GaborMatrix:
    """Matrix of ``a^w`` against the Gabor system; ``gamma`` windows the rows."""
    if g.grid != lattice.grid:
        raise GridMismatch("window and lattice live on different grids")
    _check_weyl_layout(a, g.grid)
    gamma = g if gamma is None else gamma
    G = shifted_windows(g, lattice)
    Gr = G if gamma is g else shifted_windows(gamma, lattice)
    delta = g.grid.delta
    AG = delta * (weyl_kernel(a) @ G)
    M = delta * (Gr.conj().T @ AG)
    return GaborMatrix(lattice, M, window_id, symbol_id)


def _phase_steps(grid: Grid, Z: Sequence[float]) -> tuple[int, int]:
    return grid.steps(Z[0]), grid.freq_steps(Z[1])


def magic_pair_values(
    a: SymbolGrid,
    g: SampledSignal,
    pairs: Iterable[tuple[Sequence[float], Sequence[float]]],
    gamma: SampledSignal | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Both sides of the magic formula for every pair ``(X, Y)``.

    Left: ``|<a^w pi(X) g, pi(Y) gamma>|`` through the Weyl kernel.
    Right: ``|V_Phi a((X+Y)/2, j(Y-X))|`` with ``Phi = W(gamma, g)`` through
    a phase-space FFT.  ``j(u, v) = (v, -u)``.
    """
    _check_weyl_layout(a, g.grid)
    grid = g.grid
    gamma = g if gamma is None else gamma
    K = weyl_kernel(a)
    Phi = wigner_symbol(gamma, g)
    N = grid.N
    cache: dict[tuple[int, int], np.ndarray] = {}
    lhs, rhs = [], []
    for X, Y in pairs:
        mx, kx = _phase_steps(grid, X)
        my, ky = _phase_steps(grid, Y)
        if (kx + ky) % 2:
            raise MidpointUnrepresentable(
                f"frequency midpoint of {X} and {Y} falls between grid frequencies"
            )
        u = weyl_apply(a, tf_shift(g, X), K)
        lhs.append(abs(u.inner(tf_shift(gamma, Y))))
        ix, il = N + mx + my, N // 2 + (kx + ky) // 2
        if not (0 <= ix < 2 * N and 0 <= il < N):
            raise MidpointUnrepresentable(f"midpoint of {X} and {Y} leaves the symbol grid")
        if (ix, il) not in cache:
            cache[(ix, il)] = stft_at_center(a, Phi, ix, il)
        V = cache[(ix, il)]
        # Xi = j(Y - X) = (eta_Y - eta_X, -(y - x)); dual indices are centred
        k1 = N + (ky - kx)
        k2 = N // 2 - (my - mx)
        if not (0 <= k1 < 2 * N and 0 <= k2 < N):
            raise MidpointUnrepresentable(f"frequency j(Y-X) for {X}, {Y} is outside the dual grid")
        rhs.append(abs(V[k1, k2]))
    return np.array(lhs), np.array(rhs)


def magic_formula_check(
    a: SymbolGrid,
    g: SampledSignal,
    pairs: Iterable[tuple[Sequence[float], Sequence[float]]],
    gamma: SampledSignal | None = None,
    rel: float = 1e-6,
    floor: float = 1e-12,
) -> float:
    """Largest deviation measured against ``max(rel * larger side, floor)``.

    Values at most 1 mean every pair agrees to the requested tolerance; the
    raw absolute gaps are available from :func:`magic_pair_values`.
    """
    lhs, rhs = magic_pair_values(a, g, pairs, gamma)
    if lhs.size == 0:
        return 0.0
    allowed = np.maximum(rel * np.maximum(lhs, rhs), floor)
    return float(np.max(np.abs(lhs - rhs) / allowed))


def random_pairs(
    grid: Grid,
    count: int,
    rng: np.random.Generator,
    radius: float | None = None,
    max_offset: float = 3.0,
) -> list[tuple[PhasePoint, PhasePoint]]:
    """Grid-aligned pairs ``(X, Y)`` with representable midpoints.

    ``X`` is drawn from the central box of half-width ``radius`` and
    ``Y - X`` from a box of half-width ``max_offset`` so that most pairs
    carry magnitudes above the noise floor.
    """
    radius = grid.length / 4 if radius is None else radius
    rx = int(radius / grid.delta)
    rk = int(radius / grid.dfreq)
    ox = int(max_offset / grid.delta)
    ok = int(max_offset / grid.dfreq)
    pairs = []
    while len(pairs) < count:
        mx, kx = rng.integers(-rx, rx + 1), rng.integers(-rk, rk + 1)
        dx, dk = rng.integers(-ox, ox + 1), rng.integers(-ok, ok + 1)
        if dk % 2:
            dk += 1 if dk < ok else -1
        my, ky = mx + dx, kx + dk
        if abs(my) > rx or abs(ky) > rk:
            continue
        pairs.append(
            (
                PhasePoint(mx * grid.delta, kx * grid.dfreq),
                PhasePoint(my * grid.delta, ky * grid.dfreq),
            )
        )
    return pairs


def symplectic_pairing(X: Sequence[float], Y: Sequence[float]) -> float:
    """``[(x, xi), (y, eta)] = xi*y - x*eta``."""
    return X[1] * Y[0] - X[0] * Y[1]


def j_map(Z: Sequence[float]) -> tuple[float, float]:
    """``j(u, v) = (v, -u)``."""
    return (Z[1], -Z[0])
