"""Envelopes of Gabor matrices, certified decay fits and the equivalence harness.

Only the direction "Gevrey symbol implies off-diagonal decay" is certified
numerically.  A bound counts as certified when a positive rate is fitted,
the inflated bound dominates every envelope value above the noise floor,
and the fitted constants survive doubling of the sampled box.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from .amalgam import CellCover, local_sup, wiener_norm
from .catalog import SymbolEntry
from .errors import AllBelowFloor, InsufficientData, NotInCatalog, ZeroWindow
from .frames import Lattice, dual_window
from .seqspace import LatticeSeq, seq_norm
from .tfcore import Grid, SampledSignal, SymbolGrid, big_stft, wigner_symbol
from .weights import WeightParams, log_weight
from .weyl import GaborMatrix, gabor_matrix

FLOOR = 1e-14
MIN_POINTS = 8
MIN_R2 = 0.5
VIOLATION_TOL = 1e-9
GROWTH_TOL = 0.05
# transform outputs carry round-off of about 1e-15 of their peak
REL_FLOOR = 1e-12

WindowSource = Callable[[Grid], SampledSignal]


@dataclass(frozen=True, eq=False)
class Envelope:
    """``H(z)`` on difference vectors ``z`` (phase-space units)."""

    z: np.ndarray
    H: np.ndarray
    index: np.ndarray | None = None
    spacing: tuple[float, float] | None = None

    @property
    def radii(self) -> np.ndarray:
        return np.linalg.norm(self.z, axis=1)

    def value_at(self, z) -> float:
        k = np.nonzero(np.all(np.isclose(self.z, np.asarray(z), atol=1e-12), axis=1))[0]
        return float(self.H[k[0]]) if k.size else 0.0

    def to_seq(self) -> LatticeSeq:
        if self.index is None:
            raise ValueError("envelope is not indexed by a lattice")
        return LatticeSeq(dict(zip(map(tuple, self.index), self.H)), self.spacing)

    def sorted_rows(self) -> np.ndarray:
        order = np.argsort(self.radii, kind="stable")
        return np.column_stack([self.radii[order], self.H[order]])


def _centred(d: np.ndarray, n: int) -> np.ndarray:
    return (d + n // 2) % n - n // 2


def envelope(M: GaborMatrix, m: WeightParams | None = None, inner: float | None = None) -> Envelope:
    """``H(z) = max |M[l, m]| / m(midpoint)`` over pairs with ``l - m = z``.

    Index differences are reduced to the centred range because the lattice
    lives on a torus; the midpoint is ``mu + z/2`` with the reduced ``z``.
    With ``inner`` only lattice points within that fraction of the time box
    and of the frequency band take part.  ``inner = 0.5`` keeps the region
    where the discrete Weyl calculus is free of aliasing.
    """
    lat = M.lattice
    nt, nf = lat.shape
    idx = lat.indices()
    dk = _centred(idx[:, None, 0] - idx[None, :, 0], nt)
    di = _centred(idx[:, None, 1] - idx[None, :, 1], nf)
    vals = np.abs(M.entries)
    if inner is not None:
        pts = lat.points()
        grid = lat.grid
        ok = (np.abs(pts[:, 0]) <= inner * grid.length / 2 + 1e-12) & (
            np.abs(pts[:, 1]) <= inner / (2 * grid.delta) + 1e-12
        )
        vals = np.where(ok[:, None] & ok[None, :], vals, 0.0)
    if m is not None and not m.is_one:
        sp = np.array(lat.spacing)
        mid = idx[None, :, :] * sp + np.stack([dk, di], axis=-1) * sp / 2
        vals = vals * np.exp(-log_weight(m, np.linalg.norm(mid, axis=-1)))
    key = (dk + nt // 2) * nf + (di + nf // 2)
    H = np.zeros(nt * nf)
    np.maximum.at(H, key.ravel(), vals.ravel())
    kk, ii = np.divmod(np.arange(nt * nf), nf)
    index = np.stack([kk - nt // 2, ii - nf // 2], axis=1)
    return Envelope(index * np.array(lat.spacing), H, index, lat.spacing)


@dataclass
class DecayFit:
    s: float
    epsilon: float
    C: float
    max_violation: float
    r2: float
    points: int

    @property
    def certified(self) -> bool:
        return self.epsilon > 0 and self.max_violation <= 1 + VIOLATION_TOL and self.r2 >= MIN_R2

    def bound(self, radii) -> np.ndarray:
        return self.C * np.exp(-self.epsilon * np.asarray(radii, dtype=float) ** (1.0 / self.s))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["certified"] = self.certified
        return d


def fit_decay(H: Envelope, s: float, floor: float = FLOOR) -> DecayFit:
    """Least squares of ``log H`` on ``-|z|^{1/s}``, then ``C`` raised to dominate.

    Values at or below ``floor`` are treated as zero (double-precision noise)
    and neither enter the fit nor the violation check.  Certification also
    asks for ``r2 >= 0.5`` so that unstructured data cannot pass on a slope
    that is positive by chance.
    """
    if s <= 0:
        raise ValueError("s must be positive")
    nonzero = H.H > 0
    if np.count_nonzero(nonzero) < MIN_POINTS:
        raise InsufficientData(f"need at least {MIN_POINTS} nonzero envelope values")
    keep = H.H > floor
    if not np.any(keep):
        raise AllBelowFloor(f"every envelope value is below {floor}")
    if np.count_nonzero(keep) < MIN_POINTS:
        raise InsufficientData(f"only {np.count_nonzero(keep)} envelope values above the floor")
    u = H.radii[keep] ** (1.0 / s)
    y = np.log(H.H[keep])
    A = np.column_stack([np.ones_like(u), -u])
    (logC, eps), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ np.array([logC, eps])
    sst = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / sst if sst > 0 else 1.0
    logC = float(np.max(y + eps * u))
    viol = float(np.max(np.exp(y - logC + eps * u)))
    return DecayFit(float(s), float(eps), float(np.exp(logC)), viol, r2, int(keep.sum()))


def _stable(v0: float, v1: float, tol: float = GROWTH_TOL) -> bool:
    return bool(np.isfinite(v0) and np.isfinite(v1) and v1 <= v0 * (1 + tol) + 1e-300)


# -- G(a) and membership -----------------------------------------------------


def _phi(g: SampledSignal, gamma: SampledSignal | None = None) -> SymbolGrid:
    if g.norm() == 0:
        raise ZeroWindow("window has zero norm")
    return wigner_symbol(g if gamma is None else gamma, g)


def _centres(n: int, target: int) -> int:
    return max(1, n // target)


def stft_sup(a: SymbolGrid, Phi: SymbolGrid, centres: int = 16, m: WeightParams | None = None,
             inner: float = 1.0) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``G(Xi) = max_X |V_Phi a(X, Xi)| / m(X)`` over about ``centres^2`` centres.

    ``inner`` restricts centres to that fraction of the box.  Returns the two
    frequency axes and ``G`` on them.
    """
    n1, n2 = a.shape
    B = big_stft(
        a, Phi,
        x_stride=_centres(n1, centres), xi_stride=_centres(n2, centres),
        x_limit=int(inner * n1 / 2), xi_limit=int(inner * n2 / 2),
    )
    V = np.abs(B.values)
    if m is not None and not m.is_one:
        Xc, Lc = np.meshgrid(B.X, B.XI, indexing="ij")
        V = V * np.exp(-log_weight(m, np.hypot(Xc, Lc)))[:, :, None, None]
    return B.Xi1, B.Xi2, V.max(axis=(0, 1))


def _rotated(Xi1: np.ndarray, Xi2: np.ndarray, G: np.ndarray) -> SymbolGrid:
    """``(G o j)(Y) = G(y2, -y1)`` sampled on the square part of the dual grid."""
    d1, d2 = Xi1[1] - Xi1[0], Xi2[1] - Xi2[0]
    if not np.isclose(d1, d2, rtol=1e-9):
        from .errors import NonSquareGrid

        raise NonSquareGrid("G o j needs equal dual spacings (use delta = 1/sqrt(N))")
    n2 = len(Xi2)
    off = len(Xi1) // 2 - n2 // 2
    Gs = G[off : off + n2, :]  # rows now share Xi2's coordinates
    k = np.arange(n2)
    neg = (n2 - k) % n2  # index of -y1, cyclic at the band edge
    # H[p, q] = G(y2 = Xi2[q], -y1 = -Xi2[p])
    H = Gs[np.ix_(k, neg)].T
    return SymbolGrid(Xi2.copy(), Xi2.copy(), H)


def _inner(F: SymbolGrid, frac: float) -> SymbolGrid:
    """Restriction to the central ``frac`` of both axes (the alias-free band)."""
    kx = np.abs(F.x) <= frac * np.max(np.abs(F.x)) + 1e-12
    kl = np.abs(F.xi) <= frac * np.max(np.abs(F.xi)) + 1e-12
    return SymbolGrid(F.x[kx], F.xi[kl], F.samples[np.ix_(kx, kl)])


def _denoise(G: np.ndarray, floor: float = FLOOR) -> np.ndarray:
    top = np.max(G) if G.size else 0.0
    return np.where(G > floor * top, G, 0.0)


def _gj_norm(symbol: Callable, g_src: WindowSource, grid: Grid, r: float, s: float, cell: float) -> float:
    a = SymbolGrid.for_weyl(grid, symbol)
    if not np.any(a.samples):
        return 0.0
    Phi = _phi(g_src(grid))
    Xi1, Xi2, G = stft_sup(a, Phi, inner=0.5)
    F = _rotated(Xi1, Xi2, _denoise(G))
    F = _inner(F, 0.5)
    return wiener_norm(F, CellCover(cell, cell), r, s)


def mtilde_membership(
    symbol: Callable, g_src: WindowSource, r: float, s: float, grid: Grid | None = None, cell: float = 1.0
) -> dict:
    """Amalgam norm of ``G(a) o j`` and whether it grows when the box doubles.

    ``G(a)`` below ``1e-14`` of its maximum counts as zero, otherwise the
    weight would amplify round-off at the band edge.  Doubling uses
    ``N -> 4N`` with half the spacing so the grid stays square.
    """
    grid = Grid.square(128) if grid is None else grid
    v0 = _gj_norm(symbol, g_src, grid, r, s, cell)
    big = Grid(4 * grid.N, grid.delta / 2)
    v1 = _gj_norm(symbol, g_src, big, r, s, cell)
    grows = not _stable(v0, v1) if v0 > 0 else v1 > 0
    return {"norm_value": v0, "doubled_norm_value": v1, "grows_with_box": bool(grows), "r": r, "s": s}


# -- equivalence harness -------------------------------------------------------


def _stft_envelope(a: SymbolGrid, Phi: SymbolGrid, m: WeightParams | None) -> Envelope:
    Xi1, Xi2, G = stft_sup(a, Phi, m=m, inner=0.5)
    n2 = len(Xi2)
    off = len(Xi1) // 2 - n2 // 2
    G = G[off : off + n2, :]
    Z1, Z2 = np.meshgrid(Xi2, Xi2, indexing="ij")
    # only the inner half of the band: the outer part carries periodization
    inner = (np.abs(Z1) <= Xi2.max() / 2) & (np.abs(Z2) <= Xi2.max() / 2)
    return Envelope(np.column_stack([Z1[inner], Z2[inner]]), G[inner])


def _sup_at(env: Envelope, eps: float, s: float, floor: float) -> float:
    """Smallest ``C`` with ``H <= C exp(-eps |z|^{1/s})`` above ``floor``."""
    keep = env.H > floor
    if not np.any(keep):
        return 0.0
    return float(np.exp(np.max(np.log(env.H[keep]) + eps * env.radii[keep] ** (1.0 / s))))


def _part(base: Envelope, doubled: Envelope, s: float, floor: float, extra: dict | None = None) -> dict:
    """Fit on both boxes; certified when both fits certify and ``C`` is stable.

    ``C`` is compared at the common rate ``min(eps, eps_doubled)`` so that a
    fit whose shape differs from the data (a least-squares rate that drifts
    with the range) is not mistaken for growth.
    """
    fit, err = _safe_fit(base, s, floor)
    fit2, err2 = _safe_fit(doubled, s, floor)
    out = {
        "fit": fit.to_dict() if fit else None,
        "doubled_fit": fit2.to_dict() if fit2 else None,
        "stable": False,
    }
    if fit is not None and fit2 is not None and fit.epsilon > 0 and fit2.epsilon > 0:
        eps = min(fit.epsilon, fit2.epsilon)
        c0, c1 = _sup_at(base, eps, s, floor), _sup_at(doubled, eps, s, floor)
        out.update(common_epsilon=eps, C_common=c0, doubled_C_common=c1, stable=_stable(c0, c1))
    out["certified"] = bool(fit and fit.certified and fit2 and fit2.certified and out["stable"])
    if extra:
        out.update(extra)
    if err or err2:
        out["error"] = err or err2
    return out


def _safe_fit(env: Envelope, s: float, floor: float):
    try:
        return fit_decay(env, s, floor), None
    except (InsufficientData, AllBelowFloor) as e:
        return None, str(e)


def _floor(*envs: Envelope) -> float:
    return max(FLOOR, REL_FLOOR * max(float(np.max(e.H)) if e.H.size else 0.0 for e in envs))


def decay_pipeline(
    symbol: Callable,
    g_src: WindowSource,
    lattice: Lattice,
    s: float,
    m: WeightParams | None = None,
    use_dual: bool = False,
) -> dict:
    """Parts (A) continuous, (B) discrete and (C) envelope for one symbol.

    Every part is fitted on ``lattice`` and on its refinement with twice the
    box (``lattice.refined()``); see :func:`_part` for the stability rule.
    """
    runs = []
    for lat in (lattice, lattice.refined()):
        grid = lat.grid
        a = SymbolGrid.for_weyl(grid, symbol)
        g = g_src(grid)
        gamma = dual_window(g, lat) if use_dual else None
        Phi = _phi(g, gamma)
        envA = _stft_envelope(a, Phi, m)
        M = gabor_matrix(a, g, lat, gamma=gamma)
        envB = envelope(M, m, inner=0.5)
        runs.append((envA, envB, M))
    (A0, B0, M0), (A1, B1, _) = runs
    floorA, floorB = _floor(A0, A1), _floor(B0, B1)

    partA = _part(A0, A1, s, floorA)
    partB = _part(B0, B1, s, floorB)

    extra = {}
    if partB["stable"]:
        r = partB["common_epsilon"] / 2
        n0 = seq_norm(_denoised_seq(B0, floorB), r, s)
        n1 = seq_norm(_denoised_seq(B1, floorB), r, s)
        extra = {"r": r, "seq_norm": n0, "doubled_seq_norm": n1, "norm_stable": _stable(n0, n1)}
    partC = dict(partB, **extra)
    partC["certified"] = bool(partB["certified"] and extra.get("norm_stable", False))

    return {
        "A_continuous": partA,
        "B_discrete": partB,
        "C_envelope": partC,
        "certified": bool(partA["certified"] and partB["certified"] and partC["certified"]),
        "hermitian_defect": M0.hermitian_defect(),
        "lattice": lattice.to_dict(),
        "s": s,
        "m": (m or WeightParams()).as_list(),
        "dual_window_rows": use_dual,
        "note": "discrete part uses an ordinary scalar Gabor frame",
    }


def _denoised_seq(env: Envelope, floor: float = FLOOR) -> LatticeSeq:
    H = np.where(env.H > floor, env.H, 0.0)
    return LatticeSeq(dict(zip(map(tuple, env.index), H)), env.spacing)


def verify_equivalence(
    entry: SymbolEntry,
    g_src: WindowSource,
    lattice: Lattice,
    s: float,
    m: WeightParams | None = None,
    use_dual: bool = False,
) -> dict:
    """Certify the decay consequences of the analytic Gevrey bound of ``entry``.

    Raises :class:`NotInCatalog` unless the entry carries a Gevrey order
    ``s_known <= s``; arrays without analytic metadata cannot supply the
    hypothesis.
    """
    if not isinstance(entry, SymbolEntry) or not entry.gevrey:
        raise NotInCatalog(f"{getattr(entry, 'id', entry)!r} has no certified Gevrey order")
    if entry.s_known > s + 1e-12:
        raise NotInCatalog(f"{entry.id} is certified only for s >= {entry.s_known}")
    m = entry.m if m is None else m
    report = decay_pipeline(entry, g_src, lattice, s, m, use_dual)
    report["symbol"] = entry.metadata()
    return report


def gram_envelope(g: SampledSignal, lattice: Lattice) -> Envelope:
    """Envelope of ``<pi(mu) g, pi(lambda) g>`` (identity symbol)."""
    a = SymbolGrid.for_weyl(g.grid, lambda x, xi: np.ones_like(x))
    return envelope(gabor_matrix(a, g, lattice))


def envelope_local_sup(env: Envelope, cover: CellCover) -> LatticeSeq:
    """Envelope values gathered on lattice cells (``H`` as a function on ``z``)."""
    lat_idx = env.index
    nt = lat_idx[:, 0].max() - lat_idx[:, 0].min() + 1
    nf = lat_idx[:, 1].max() - lat_idx[:, 1].min() + 1
    grid = np.zeros((nt, nf))
    grid[lat_idx[:, 0] - lat_idx[:, 0].min(), lat_idx[:, 1] - lat_idx[:, 1].min()] = env.H
    x = np.arange(lat_idx[:, 0].min(), lat_idx[:, 0].max() + 1) * env.spacing[0]
    xi = np.arange(lat_idx[:, 1].min(), lat_idx[:, 1].max() + 1) * env.spacing[1]
    return local_sup(SymbolGrid(x, xi, grid), cover)
