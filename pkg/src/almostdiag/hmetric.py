"""Diagonal phase-space metrics, admissibility scans, wave packets and the
metric-adapted diagonalization estimate at desk scale."""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Sequence

import numpy as np

from .catalog import SymbolEntry, WindowEntry
from .errors import MissingWindow, NonSquareGrid, NotInCatalog, PacketEscapesBox
from .tfcore import Grid, PhasePoint, SampledSignal, SymbolGrid, fourier2, tf_shift
from .weights import WeightParams, log_weight
from .weyl import weyl_kernel

GROWTH_TOL = 0.05
N0_SCAN = np.arange(0.0, 8.01, 0.5)
TAIL_MASS = 1e-20


@dataclass(frozen=True)
class MetricSpec:
    """``g_X(T) = q1(X) T1^2 + q2(X) T2^2``.

    ``euclidean``: ``q = (1, 1)``.  ``split``: ``q = (h, 1/h)`` with
    ``h(X) = (1 + |X|^2)^{-rho}``; both are their own symplectic duals.
    """

    id: str = "euclidean"
    rho: float = 0.0
    M: WeightParams = field(default_factory=WeightParams)

    @classmethod
    def parse(cls, text: str, M: WeightParams | None = None) -> "MetricSpec":
        M = WeightParams() if M is None else M
        if text == "euclidean":
            return cls("euclidean", 0.0, M)
        if text.startswith("split:"):
            return cls("split", float(text[6:]), M)
        raise NotInCatalog(f"unknown metric {text!r}; use euclidean or split:<rho>")

    @property
    def label(self) -> str:
        return self.id if self.id == "euclidean" else f"split:{self.rho:g}"

    def q(self, X: np.ndarray) -> np.ndarray:
        """Diagonal of ``Q_X`` for points stacked on the last axis (``(..., 2)``)."""
        X = np.asarray(X, dtype=float)
        if self.id == "euclidean":
            return np.ones(X.shape)
        h = (1.0 + np.sum(X**2, axis=-1)) ** (-self.rho)
        return np.stack([h, 1.0 / h], axis=-1)

    def q_sigma(self, X: np.ndarray) -> np.ndarray:
        """Diagonal of ``Q^sigma = sigma^t Q^{-1} sigma`` = ``(1/q2, 1/q1)``."""
        q = self.q(X)
        return np.stack([1.0 / q[..., 1], 1.0 / q[..., 0]], axis=-1)

    def g(self, X, T) -> np.ndarray:
        return np.sum(self.q(X) * np.asarray(T, dtype=float) ** 2, axis=-1)

    def g_sigma(self, X, T) -> np.ndarray:
        return np.sum(self.q_sigma(X) * np.asarray(T, dtype=float) ** 2, axis=-1)

    def weight(self, X) -> np.ndarray:
        return np.exp(log_weight(self.M, np.linalg.norm(np.asarray(X, dtype=float), axis=-1)))

    def to_dict(self) -> dict:
        return {"id": self.label, "rho": self.rho, "M": self.M.as_list()}


# -- symplectic Fourier transform and STFT ------------------------------------


def _check_square(F: SymbolGrid):
    n1, n2 = F.shape
    if n1 != n2 or not np.allclose(F.x, F.xi, atol=1e-12) or not np.isclose(F.dx**2 * n1, 1.0, rtol=1e-9):
        raise NonSquareGrid("need equal axes with spacing d and d^2 n = 1")


def symplectic_fourier(F: SymbolGrid) -> SymbolGrid:
    """``F_sigma F(X) = int exp(-2 pi i [X, Y]) F(Y) dY``.

    ``[X, Y] = xi y - x eta`` turns the kernel into the ordinary one at
    ``(xi, -x)``, so the result is the 2-D transform read at that point.
    """
    _check_square(F)
    n = F.shape[0]
    Fh = fourier2(F)
    neg = (n - np.arange(n)) % n  # index of -x_p on the centred axis
    res = Fh[:, neg].T  # res[p, q] = Fh[q, neg[p]]
    return SymbolGrid(F.x.copy(), F.xi.copy(), res)


def symplectic_pairing(X: Sequence[float], Y: Sequence[float]) -> float:
    return X[1] * Y[0] - X[0] * Y[1]


def symplectic_stft(
    f: SymbolGrid, phi_family: Callable[[PhasePoint], SymbolGrid] | None, X, Xi
) -> complex:
    """``F_sigma(f conj(phi_X))(Xi)`` by direct quadrature."""
    if phi_family is None:
        raise MissingWindow("no window family supplied")
    phi = phi_family(PhasePoint(*X))
    if phi is None:
        raise MissingWindow(f"window family has no member at {X}")
    Y1, Y2 = np.meshgrid(f.x, f.xi, indexing="ij")
    phase = np.exp(-2j * np.pi * (Xi[1] * Y1 - Xi[0] * Y2))
    return complex(f.cell * np.sum(phase * f.samples * np.conj(phi.samples)))


def rigid_family(Phi: Callable[[np.ndarray, np.ndarray], np.ndarray], like: SymbolGrid):
    """``X -> Phi(. - X)`` sampled on the layout of ``like``."""

    def member(X: PhasePoint) -> SymbolGrid:
        A, B = np.meshgrid(like.x - X[0], like.xi - X[1], indexing="ij")
        return SymbolGrid(like.x, like.xi, Phi(A, B))

    return member


# -- admissibility -------------------------------------------------------------


def sample_box(box: float = 12.0, n: int = 61) -> np.ndarray:
    ax = np.linspace(-box, box, n)
    A, B = np.meshgrid(ax, ax, indexing="ij")
    return np.stack([A.ravel(), B.ravel()], axis=1)


def _pair_scan(spec: MetricSpec, pts: np.ndarray, r0: float, chunk: int = 256):
    """Slow-variation constant and temperance constants for every ``N0`` in the scan."""
    q = spec.q(pts)
    sv = 1.0
    logC = np.full(N0_SCAN.shape, -np.inf)
    for s0 in range(0, len(pts), chunk):
        X = pts[s0 : s0 + chunk]
        qX = q[s0 : s0 + chunk]
        D = X[:, None, :] - pts[None, :, :]
        ratio = np.max(np.maximum(qX[:, None, :] / q[None, :, :], q[None, :, :] / qX[:, None, :]), axis=-1)
        gX = np.sum(qX[:, None, :] * D**2, axis=-1)
        near = gX <= r0**2
        if np.any(near):
            sv = max(sv, float(np.max(ratio[near])))
        qs = np.stack([1.0 / qX[:, 1], 1.0 / qX[:, 0]], axis=-1)
        lg = np.log1p(np.sum(qs[:, None, :] * D**2, axis=-1))
        lr = np.log(ratio)
        for k, n0 in enumerate(N0_SCAN):
            logC[k] = max(logC[k], float(np.max(lr - n0 * lg)))
    return sv, np.exp(logC)


def _weight_scan(spec: MetricSpec, pts: np.ndarray, r: float, chunk: int = 256):
    """Admissibility constants of ``M`` (local constancy and tempered growth)."""
    lm = log_weight(spec.M, np.linalg.norm(pts, axis=1))
    q = spec.q(pts)
    loc = 0.0
    logC = np.full(N0_SCAN.shape, -np.inf)
    for s0 in range(0, len(pts), chunk):
        X = pts[s0 : s0 + chunk]
        qX = q[s0 : s0 + chunk]
        D = X[:, None, :] - pts[None, :, :]
        dl = np.abs(lm[s0 : s0 + chunk, None] - lm[None, :])
        near = np.sum(qX[:, None, :] * D**2, axis=-1) <= r**2
        if np.any(near):
            loc = max(loc, float(np.max(dl[near])))
        qs = np.stack([1.0 / qX[:, 1], 1.0 / qX[:, 0]], axis=-1)
        lg = np.log1p(np.sum(qs[:, None, :] * D**2, axis=-1))
        for k, n0 in enumerate(N0_SCAN):
            logC[k] = max(logC[k], float(np.max(dl - n0 * lg)))
    return float(np.exp(loc)), np.exp(logC)


def _pick_n0(C: np.ndarray, C_big: np.ndarray):
    for k, n0 in enumerate(N0_SCAN):
        if np.isfinite(C[k]) and C_big[k] <= C[k] * (1 + GROWTH_TOL):
            return float(n0), float(C[k]), float(C_big[k])
    return None, float(C[-1]), float(C_big[-1])


def check_metric_admissible(
    spec: MetricSpec, samples: np.ndarray | None = None, r0: float = 1.0, box: float = 12.0, n: int = 61
) -> dict:
    """Scan sampled pairs for slow variation, temperance and the uncertainty principle.

    Constants are the empirical suprema over the sample; a condition "holds"
    when its constant changes by less than 5% as the sampled box doubles
    (same sample count).  ``N0`` is the smallest exponent of the scan
    ``0, 0.5, ..., 8`` that passes.
    """
    pts = sample_box(box, n) if samples is None else np.asarray(samples, dtype=float).reshape(-1, 2)
    big = 2.0 * pts
    sv, C = _pair_scan(spec, pts, r0)
    sv_big, C_big = _pair_scan(spec, big, r0)
    n0, c0, c0_big = _pick_n0(C, C_big)
    q, qs = spec.q(pts), spec.q_sigma(pts)
    worst = float(np.max(q / qs))
    report = {
        "metric": spec.to_dict(),
        "slow_variation": {
            "holds": bool(sv_big <= sv * (1 + GROWTH_TOL)), "C0": sv, "r0": r0, "doubled_C0": sv_big,
        },
        "temperance": {"holds": n0 is not None, "C0": c0, "N0": n0, "doubled_C0": c0_big},
        "uncertainty": {"holds": bool(worst <= 1 + 1e-12), "worst_ratio": worst},
        "samples": {"count": int(len(pts)), "box": float(np.max(np.abs(pts))) if len(pts) else 0.0},
    }
    if not spec.M.is_one:
        loc, W = _weight_scan(spec, pts, r0)
        loc_big, W_big = _weight_scan(spec, big, r0)
        wn0, wc, wc_big = _pick_n0(W, W_big)
        report["weight"] = {
            "local_C": loc, "doubled_local_C": loc_big,
            "holds": bool(loc_big <= loc * (1 + GROWTH_TOL) and wn0 is not None),
            "C": wc, "N": wn0,
        }
    return report


# -- wave packets and the diagonalization estimate -----------------------------


def _evaluate(chi, t: np.ndarray, grid: Grid) -> np.ndarray:
    """Values of ``chi`` at arbitrary ``t``; samples are interpolated spectrally."""
    if isinstance(chi, WindowEntry):
        return np.asarray(np.broadcast_to(chi.func(t), t.shape), dtype=complex)
    if callable(chi) and not isinstance(chi, SampledSignal):
        return np.asarray(chi(t), dtype=complex)
    c = np.fft.fft(np.fft.ifftshift(chi.samples)) / chi.grid.N
    k = np.fft.fftfreq(chi.grid.N, d=chi.grid.delta)
    # trigonometric interpolation on the centred period, zero outside it
    vals = np.exp(2j * np.pi * np.outer(t, k)) @ c
    vals[np.abs(t) > chi.grid.length / 2] = 0.0
    return vals


def wave_packet(chi, X, spec: MetricSpec, grid: Grid | None = None, at=None) -> SampledSignal:
    """``pi(X)`` applied to ``q1^{-1/4} chi(t / sqrt(q1))`` with ``q = Q_at``.

    ``at`` defaults to ``X``.  The amplitude factor keeps the norm of ``chi``.
    """
    grid = chi.grid if grid is None else grid
    at = X if at is None else at
    q1 = float(spec.q(np.asarray(at, dtype=float))[0])
    t = grid.points
    vals = _evaluate(chi, t / np.sqrt(q1), grid) / q1**0.25
    mass = np.abs(vals) ** 2
    total = mass.sum()
    if total == 0:
        raise PacketEscapesBox("packet vanishes on the grid")
    shift = abs(grid.steps(X[0])) * grid.delta
    edge = np.abs(t) > grid.length / 2 - shift - grid.delta
    if mass[edge].sum() > TAIL_MASS * total:
        raise PacketEscapesBox(f"packet at {tuple(X)} leaves the box (tail {mass[edge].sum() / total:.2e})")
    return tf_shift(SampledSignal(grid, vals), X)


def default_pairs(grid: Grid, step: float = 1.0, frac: float = 0.5) -> list[tuple[PhasePoint, PhasePoint]]:
    """All ordered pairs of a square ``step`` lattice inside ``frac`` of the box and band."""
    m, k = grid.steps(step), grid.freq_steps(step)
    rx = int(frac * grid.N / 2) // m
    rk = int(frac * grid.N / 2) // k
    pts = [PhasePoint(i * m * grid.delta, j * k * grid.dfreq) for i in range(-rx, rx + 1) for j in range(-rk, rk + 1)]
    return [(P, R) for P in pts for R in pts]


def _pair_values(kernel: np.ndarray, chi, spec: MetricSpec, grid: Grid, pairs, Npow: float) -> np.ndarray:
    out = np.empty(len(pairs))
    d = grid.delta
    cache: dict = {}
    for n, (X, Xi) in enumerate(pairs):
        mid = ((X[0] + Xi[0]) / 2, (X[1] + Xi[1]) / 2)
        key_mid = mid if spec.id != "euclidean" else None
        kx = (X, key_mid)
        if kx not in cache:
            cache[kx] = d * (kernel @ wave_packet(chi, X, spec, grid, at=mid).samples)
        u = cache[kx]
        v = wave_packet(chi, Xi, spec, grid, at=mid).samples
        val = abs(d * np.vdot(v, u))
        diff = np.array([X[0] - Xi[0], X[1] - Xi[1]])
        fac = (1.0 + float(spec.g(np.array(mid), diff))) ** Npow / float(spec.weight(np.array(mid)))
        out[n] = fac * val
    return out


def hm_diag_check(
    symbol: Callable,
    chi,
    spec: MetricSpec,
    Npow: float,
    grid: Grid | None = None,
    pairs: list | None = None,
) -> dict:
    """``M(mid)^{-1} (1 + g_mid(X - Xi))^N |<a^w pi(X) chi_mid, pi(Xi) chi_mid>|``.

    Evaluated on ``pairs`` and, for the box-doubling verdict, on the grid
    with twice the box (``4N`` samples at half spacing) over the pairs and
    their dilates by 2.  ``symbol`` is called on the Weyl layout; ``chi`` is
    a catalog window, a callable of ``t`` or a sampled signal.
    """
    grid = Grid.square(256) if grid is None else grid
    pairs = default_pairs(grid) if pairs is None else pairs
    a = SymbolGrid.for_weyl(grid, symbol)
    vals = _pair_values(weyl_kernel(a), chi, spec, grid, pairs, Npow)
    big = Grid(4 * grid.N, grid.delta / 2)
    a_big = SymbolGrid.for_weyl(big, symbol)
    wide = list(pairs) + [
        (PhasePoint(2 * X[0], 2 * X[1]), PhasePoint(2 * Y[0], 2 * Y[1])) for X, Y in pairs
    ]
    vals_big = _pair_values(weyl_kernel(a_big), chi, spec, big, wide, Npow)
    sup, sup_big = float(np.max(vals)), float(np.max(vals_big))
    k = int(np.argmax(vals))
    return {
        "metric": spec.to_dict(),
        "N_power": Npow,
        "sup_value": sup,
        "argsup": [list(pairs[k][0]), list(pairs[k][1])],
        "doubled_sup_value": sup_big,
        "stable": bool(sup_big <= sup * (1 + GROWTH_TOL)),
        "pairs": [
            {"X": list(X), "Xi": list(Y), "value": float(v)} for (X, Y), v in zip(pairs, vals)
        ],
    }


# -- S(M, g) seminorms ---------------------------------------------------------


def _fd_derivative(f: Callable, nx: int, nxi: int, h: float = 1e-5):
    """Central finite differences (orders up to 2 per axis)."""
    coeffs = {0: [(0, 1.0)], 1: [(-1, -0.5), (1, 0.5)], 2: [(-1, 1.0), (0, -2.0), (1, 1.0)]}
    if nx > 2 or nxi > 2:
        raise NotInCatalog("finite differences are limited to order 2 per axis")

    def call(x, xi):
        acc = 0
        for (i, ci), (j, cj) in product(coeffs[nx], coeffs[nxi]):
            acc = acc + ci * cj * np.asarray(f(x + i * h, xi + j * h), dtype=complex)
        return acc / h ** (nx + nxi)

    return call


def _seminorm_on(derivs: dict, spec: MetricSpec, pts: np.ndarray, k: int) -> float:
    q = spec.q(pts)
    M = spec.weight(pts)
    best = 0.0
    for (nx, nxi), f in derivs.items():
        vals = np.abs(f(pts[:, 0], pts[:, 1]))
        denom = M * q[:, 0] ** (nx / 2) * q[:, 1] ** (nxi / 2)
        best = max(best, float(np.max(vals / denom)))
    return best


def sg_seminorm(
    a, spec: MetricSpec, k: int, box: float = 12.0, n: int = 121, allow_fd: bool = False
) -> dict:
    """``sup_{l <= k} sup_X |a^(l)(X; T...)| / (M(X) prod g_X(T_j)^{1/2})``.

    Directions run over the coordinate axes, where the metric is diagonal.
    Catalog symbols use closed-form derivatives; other callables need
    ``allow_fd`` (central differences, step ``1e-5``).  The value is also
    computed on the doubled box; ``grows_with_box`` flags non-membership.
    """
    if k < 0 or k > 3:
        raise NotInCatalog("seminorm order must be between 0 and 3")
    orders = [(i, l - i) for l in range(k + 1) for i in range(l + 1)]
    if isinstance(a, SymbolEntry):
        derivs = {o: a.derivative_func(*o) for o in orders}
    elif allow_fd:
        derivs = {o: _fd_derivative(a, *o) for o in orders}
    else:
        raise NotInCatalog("no analytic derivatives available and finite differences are disallowed")
    v = _seminorm_on(derivs, spec, sample_box(box, n), k)
    v_big = _seminorm_on(derivs, spec, sample_box(2 * box, n), k)
    return {
        "value": v,
        "doubled_value": v_big,
        "grows_with_box": bool(not np.isfinite(v_big) or v_big > v * (1 + GROWTH_TOL)),
        "k": k,
        "metric": spec.to_dict(),
    }
