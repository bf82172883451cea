"""Finite Gabor systems on separable lattices inside the cyclic grid model."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg, eigsh

from .errors import GridMismatch, LatticeMismatch, NotAFrame, ZeroWindow
from .seqspace import LatticeSeq
from .tfcore import Grid, SampledSignal, modulation

DENSE_LIMIT = 512
FRAME_RATIO_MIN = 1e-2
TIGHT_TOL = 1e-10
DUAL_RESIDUAL = 1e-10


@dataclass(frozen=True)
class Lattice:
    """``alpha Z x beta Z`` with ``alpha = a delta`` and ``beta = b / (N delta)``.

    Indices are centred, ``k`` in ``[-N/(2a), N/(2a))``, so every point lies
    inside the sampled box; the cyclic model makes this choice equivalent to
    indexing from zero.
    """

    grid: Grid
    a: int
    b: int

    def __post_init__(self):
        if self.a <= 0 or self.b <= 0:
            raise LatticeMismatch("lattice steps must be positive")
        if self.grid.N % self.a or self.grid.N % self.b:
            raise LatticeMismatch(f"a={self.a} and b={self.b} must divide N={self.grid.N}")

    @property
    def alpha(self) -> float:
        return self.a * self.grid.delta

    @property
    def beta(self) -> float:
        return self.b * self.grid.dfreq

    @property
    def spacing(self) -> tuple[float, float]:
        return (self.alpha, self.beta)

    @property
    def density(self) -> float:
        """``alpha * beta = a b / N``."""
        return self.a * self.b / self.grid.N

    @property
    def shape(self) -> tuple[int, int]:
        return (self.grid.N // self.a, self.grid.N // self.b)

    @property
    def size(self) -> int:
        return self.shape[0] * self.shape[1]

    def time_indices(self) -> np.ndarray:
        n = self.shape[0]
        return np.arange(n) - n // 2

    def freq_indices(self) -> np.ndarray:
        n = self.shape[1]
        return np.arange(n) - n // 2

    def indices(self) -> np.ndarray:
        """``(size, 2)`` index pairs, time index outermost."""
        K, I = np.meshgrid(self.time_indices(), self.freq_indices(), indexing="ij")
        return np.stack([K.ravel(), I.ravel()], axis=1)

    def points(self) -> np.ndarray:
        return self.indices() * np.array(self.spacing)

    def refined(self) -> "Lattice":
        """Same continuum lattice on a grid with half the spacing and twice the box."""
        return Lattice(Grid(4 * self.grid.N, self.grid.delta / 2), 2 * self.a, 2 * self.b)

    def to_seq(self, values: np.ndarray) -> LatticeSeq:
        """Wrap a flat coefficient vector (ordering of :meth:`indices`)."""
        return LatticeSeq(dict(zip(map(tuple, self.indices()), values)), self.spacing)

    def from_seq(self, c: LatticeSeq) -> np.ndarray:
        if not np.allclose(c.spacing, self.spacing, rtol=1e-12, atol=0):
            raise LatticeMismatch(f"sequence spacing {c.spacing} differs from lattice {self.spacing}")
        nt, nf = self.shape
        out = np.zeros(self.size, dtype=complex)
        for (k, i), v in c.entries.items():
            kk, ii = k + nt // 2, i + nf // 2
            if not (0 <= kk < nt and 0 <= ii < nf):
                raise LatticeMismatch(f"index {(k, i)} is not a lattice point")
            out[kk * nf + ii] = v
        return out

    def to_dict(self) -> dict:
        return {
            "N": self.grid.N,
            "delta": self.grid.delta,
            "a": self.a,
            "b": self.b,
            "alpha": self.alpha,
            "beta": self.beta,
            "density": self.density,
        }


def _check_grid(g: SampledSignal, lattice: Lattice):
    if g.grid != lattice.grid:
        raise GridMismatch(f"signal grid {g.grid} differs from lattice grid {lattice.grid}")


def shifted_windows(g: SampledSignal, lattice: Lattice) -> np.ndarray:
    """``N x |Lambda|`` matrix whose columns are ``pi(lambda) g``."""
    _check_grid(g, lattice)
    grid = lattice.grid
    nt, nf = lattice.shape
    mods = np.stack([modulation(grid, i * lattice.beta) for i in lattice.freq_indices()], axis=1)
    out = np.empty((grid.N, nt * nf), dtype=complex)
    for kk, k in enumerate(lattice.time_indices()):
        out[:, kk * nf : (kk + 1) * nf] = np.roll(g.samples, k * lattice.a)[:, None] * mods
    return out


def gabor_coefficients(f: SampledSignal, g: SampledSignal, lattice: Lattice) -> LatticeSeq:
    """``<f, pi(lambda) g>`` for every lattice point."""
    _check_grid(f, lattice)
    G = shifted_windows(g, lattice)
    return lattice.to_seq(f.grid.delta * (G.conj().T @ f.samples))


def frame_operator_matrix(g: SampledSignal, lattice: Lattice) -> np.ndarray:
    G = shifted_windows(g, lattice)
    return g.grid.delta * (G @ G.conj().T)


def frame_operator_apply(f: SampledSignal, g: SampledSignal, lattice: Lattice) -> SampledSignal:
    """``S f = sum <f, pi(lambda) g> pi(lambda) g``."""
    _check_grid(f, lattice)
    G = shifted_windows(g, lattice)
    return SampledSignal(f.grid, G @ (f.grid.delta * (G.conj().T @ f.samples)))


@dataclass
class FrameBounds:
    c1: float
    c2: float
    method: str

    @property
    def ratio(self) -> float:
        return self.c1 / self.c2 if self.c2 > 0 else 0.0

    @property
    def tight(self) -> bool:
        return self.c1 > 0 and self.c2 / self.c1 - 1 <= TIGHT_TOL

    @property
    def is_frame(self) -> bool:
        return self.ratio >= FRAME_RATIO_MIN

    def to_dict(self) -> dict:
        d = asdict(self)
        d.update(ratio=self.ratio, tight=self.tight, is_frame=self.is_frame)
        return d


def _operator(g: SampledSignal, lattice: Lattice) -> LinearOperator:
    G = shifted_windows(g, lattice)
    Gh = g.grid.delta * G.conj().T
    N = g.grid.N
    return LinearOperator((N, N), matvec=lambda v: G @ (Gh @ v), dtype=complex)


def frame_bounds(g: SampledSignal, lattice: Lattice) -> FrameBounds:
    """Extreme eigenvalues of the frame operator.

    Dense Hermitian eigensolver up to ``N = 512``, Lanczos iteration beyond.
    """
    _check_grid(g, lattice)
    if g.norm() == 0:
        raise ZeroWindow("window has zero norm")
    if g.grid.N <= DENSE_LIMIT:
        ev = np.linalg.eigvalsh(frame_operator_matrix(g, lattice))
        c1, c2, method = ev[0], ev[-1], "exact-eigen"
    else:
        op = _operator(g, lattice)
        v0 = np.ones(g.grid.N, dtype=complex)
        c2 = eigsh(op, k=1, which="LA", v0=v0, return_eigenvectors=False)[0]
        c1 = eigsh(op, k=1, which="SA", v0=v0, return_eigenvectors=False)[0]
        method = "power-iteration"
    return FrameBounds(float(max(c1, 0.0)), float(c2), method)


def frame_trend(g_factory, lattice: Lattice) -> dict:
    """Bounds on ``lattice`` and on its refinement (same continuum lattice).

    ``g_factory(grid)`` samples the window on a given grid.  A frame failure
    is signalled only when the ratio is below threshold on both grids and
    does not recover under refinement.
    """
    fb = frame_bounds(g_factory(lattice.grid), lattice)
    fine = lattice.refined()
    fb_fine = frame_bounds(g_factory(fine.grid), fine)
    failing = (
        fb.ratio < FRAME_RATIO_MIN
        and fb_fine.ratio < FRAME_RATIO_MIN
        and fb_fine.ratio <= fb.ratio + 1e-12
    )
    return {
        "bounds": fb.to_dict(),
        "refined_bounds": fb_fine.to_dict(),
        "refined_lattice": fine.to_dict(),
        "is_frame_trend": not failing,
    }


def dual_window(g: SampledSignal, lattice: Lattice, bounds: FrameBounds | None = None) -> SampledSignal:
    """``gamma = S^{-1} g`` by conjugate gradients."""
    bounds = frame_bounds(g, lattice) if bounds is None else bounds
    if not bounds.is_frame:
        raise NotAFrame(f"c1/c2 = {bounds.ratio:.3g} is below {FRAME_RATIO_MIN}")
    op = _operator(g, lattice)
    gn = np.linalg.norm(g.samples)
    x0 = g.samples / bounds.c2
    sol, info = cg(op, g.samples, x0=x0, rtol=1e-14, atol=0.0, maxiter=10 * g.grid.N)
    res = np.linalg.norm(op.matvec(sol) - g.samples)
    if res > DUAL_RESIDUAL * gn:
        raise NotAFrame(f"dual window residual {res / gn:.3g} exceeds {DUAL_RESIDUAL} (cg info {info})")
    return SampledSignal(g.grid, sol)


def dual_residual(g: SampledSignal, gamma: SampledSignal, lattice: Lattice) -> float:
    """``||S gamma - g|| / ||g||``."""
    return (frame_operator_apply(gamma, g, lattice) - g).norm() / g.norm()


def reconstruct(coeffs: LatticeSeq, gamma: SampledSignal, lattice: Lattice) -> SampledSignal:
    """``sum c_lambda pi(lambda) gamma``."""
    c = lattice.from_seq(coeffs)
    return SampledSignal(gamma.grid, shifted_windows(gamma, lattice) @ c)


def gaussian_decay_fit(h: SampledSignal, floor: float = 1e-13) -> dict:
    """Fit ``|h(x)| <= C exp(-c x^2)`` on samples above ``floor * max|h|``.

    ``c`` comes from least squares on ``log|h|`` against ``x^2``; ``C`` is
    then raised until every sample above the floor is dominated.
    """
    x = h.grid.points
    mag = np.abs(h.samples)
    keep = mag > floor * mag.max()
    X2, L = x[keep] ** 2, np.log(mag[keep])
    slope, _ = np.polyfit(X2, L, 1)
    c = -float(slope)
    logC = float(np.max(L + c * X2))
    return {"c": c, "C": float(np.exp(logC)), "holds": c > 0, "points": int(keep.sum())}
