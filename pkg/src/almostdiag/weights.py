"""
Weights ``m(x) = exp(a|x|^b) (1+|x|)^c log(e+|x|)^t`` and empirical class checks.

The classes (submultiplicative, subconvolutive, moderate) are asymptotic, so
each check reports the worst ratio over a sampled box and calls the class
"held" only if that constant is stable (relative change below 5%) when the
sampling is refined and when the box is doubled.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import NotIntegrable
from .tfcore import Grid

STABILITY_TOL = 0.05
DEFAULT_BOX = 12.0
DEFAULT_N = 481


@dataclass(frozen=True)
class WeightParams:
    a: float = 0.0
    b: float = 0.0
    c: float = 0.0
    t: float = 0.0

    def __post_init__(self):
        if not all(np.isfinite([self.a, self.b, self.c, self.t])):
            raise ValueError("weight parameters must be finite")
        if self.b < 0:
            raise ValueError("b must be nonnegative")

    @classmethod
    def parse(cls, text: str) -> "WeightParams":
        """``"a,b,c,t"``; the word ``one`` gives ``m = 1``."""
        if text.strip().lower() in ("one", "1"):
            return cls()
        vals = [float(v) for v in text.split(",")]
        if len(vals) != 4:
            raise ValueError(f"expected four comma-separated numbers, got {text!r}")
        return cls(*vals)

    @classmethod
    def exponential(cls, r: float, s: float) -> "WeightParams":
        """``exp(r |x|^{1/s})``."""
        return cls(r, 1.0 / s, 0.0, 0.0)

    @property
    def is_one(self) -> bool:
        return self.a == 0 and self.c == 0 and self.t == 0

    def as_list(self) -> list[float]:
        return [self.a, self.b, self.c, self.t]

    def __call__(self, x) -> np.ndarray:
        return eval_weight(self, x)

    def log(self, x) -> np.ndarray:
        return log_weight(self, x)


def _radius(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.abs(x)


def log_weight(p: WeightParams, x) -> np.ndarray:
    """``log m(x)``; ``x`` holds magnitudes or scalar coordinates."""
    ax = _radius(x)
    powb = np.ones_like(ax) if p.b == 0 else ax**p.b
    return p.a * powb + p.c * np.log1p(ax) + p.t * np.log(np.log(np.e + ax))


def eval_weight(p: WeightParams, x) -> np.ndarray:
    """Weight value; for vectors pass the Euclidean norm ``|x|``."""
    return np.exp(log_weight(p, x))


def norm_weight(p: WeightParams, X: np.ndarray, axis: int = -1) -> np.ndarray:
    """Weight of the vectors stored along ``axis``."""
    return eval_weight(p, np.linalg.norm(X, axis=axis))


@dataclass
class ClassReport:
    kind: str
    holds: bool
    constant: float
    witness: tuple
    refined_constant: float
    doubled_constant: float

    def to_dict(self) -> dict:
        d = asdict(self)
        d["witness"] = [float(w) for w in self.witness]
        return d


def _pair_max(log_ratio, box: float, n: int):
    xs = np.linspace(-box, box, n)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    L = log_ratio(X, Y)
    k = np.unravel_index(np.argmax(L), L.shape)
    return float(np.exp(L[k])), (float(X[k]), float(Y[k]))


def _stable(c0: float, *others: float) -> bool:
    if not np.isfinite(c0):
        return False
    return all(np.isfinite(c) and abs(c - c0) <= STABILITY_TOL * abs(c0) for c in others)


def _pair_report(kind, log_ratio, box, n) -> ClassReport:
    C, w = _pair_max(log_ratio, box, n)
    C_ref, _ = _pair_max(log_ratio, box, 2 * n - 1)
    C_big, _ = _pair_max(log_ratio, 2 * box, 2 * n - 1)
    return ClassReport(kind, _stable(C, C_ref, C_big), C, w, C_ref, C_big)


def check_submultiplicative(p: WeightParams, box: float = DEFAULT_BOX, n: int = DEFAULT_N) -> ClassReport:
    """Worst ``m(x+y) / (m(x) m(y))`` over pairs in ``[-box, box]^2``."""
    return _pair_report(
        "submultiplicative",
        lambda X, Y: log_weight(p, X + Y) - log_weight(p, X) - log_weight(p, Y),
        box,
        n,
    )


def check_moderate(
    m: WeightParams, v: WeightParams, box: float = DEFAULT_BOX, n: int = DEFAULT_N
) -> ClassReport:
    """Worst ``m(x+y) / (v(x) m(y))``."""
    return _pair_report(
        "moderate",
        lambda X, Y: log_weight(m, X + Y) - log_weight(v, X) - log_weight(m, Y),
        box,
        n,
    )


def subconv_target(p: WeightParams) -> WeightParams:
    """Weight that ``m^{-1} * m^{-1}`` is compared against.

    For ``exp(r|x|^{1/s})`` with ``0 < s <= 1`` (``b >= 1``) the rate drops
    to ``2^{-1/s} r``; every other weight is compared against itself.
    """
    if p.a > 0 and p.b >= 1 and p.c == 0 and p.t == 0:
        return WeightParams(p.a * subconv_constant(1.0 / p.b), p.b, 0.0, 0.0)
    return p


def _subconv_constant_on(p: WeightParams, target: WeightParams, grid: Grid, n_eval: int = 1025):
    """Worst ratio at ``n_eval`` evenly strided grid points, summed in log space.

    The direct sum keeps full relative accuracy where ``1/m`` spans hundreds
    of orders of magnitude (an FFT convolution would drown in round-off).
    """
    x = grid.points
    lw = -log_weight(p, x)
    stride = max(1, grid.N // (n_eval - 1))
    js = np.arange(0, grid.N, stride)
    best, where = -np.inf, 0.0
    for chunk in np.array_split(js, max(1, len(js) // 64)):
        # (1/m * 1/m)(x_j) = delta * sum_k 1/m(x_j - x_k) 1/m(x_k), box-truncated
        diff = chunk[:, None] - np.arange(grid.N)[None, :] + grid.N // 2
        valid = (diff >= 0) & (diff < grid.N)
        terms = np.where(valid, lw[np.clip(diff, 0, grid.N - 1)] + lw[None, :], -np.inf)
        logconv = logsumexp(terms, axis=1) + np.log(grid.delta)
        lr = logconv + log_weight(target, x[chunk])
        k = int(np.argmax(lr))
        if lr[k] > best:
            best, where = float(lr[k]), float(x[chunk][k])
    mass = float(np.exp(logsumexp(lw) + np.log(grid.delta)))
    return float(np.exp(best)), where, mass


def check_subconvolutive(p: WeightParams, grid: Grid | None = None) -> ClassReport:
    """Worst ``(m^{-1} * m^{-1})(x) m'(x)`` on ``grid`` with ``m' = subconv_target(p)``.

    Raises :class:`NotIntegrable` when the mass of ``m^{-1}`` keeps growing
    as the box doubles.  The default box is wide because for ``b < 1`` the
    worst ratio is reached far from the origin.
    """
    grid = Grid(16384, 0.25) if grid is None else grid
    target = subconv_target(p)
    C, w, mass = _subconv_constant_on(p, target, grid)
    C_big, _, mass_big = _subconv_constant_on(p, target, grid.doubled())
    if not _stable(mass, mass_big):
        raise NotIntegrable(f"sum of 1/m grows from {mass:.4g} to {mass_big:.4g} when the box doubles")
    C_ref, _, _ = _subconv_constant_on(p, target, Grid(2 * grid.N, grid.delta / 2))
    return ClassReport("subconvolutive", _stable(C, C_ref, C_big), C, (w,), C_ref, C_big)


def subconv_constant(s: float) -> float:
    """Rate factor ``c``: 1 for ``s > 1``, ``2^{-1/s}`` for ``0 < s <= 1``."""
    if s <= 0:
        raise ValueError("s must be positive")
    return 1.0 if s > 1 else 2.0 ** (-1.0 / s)
