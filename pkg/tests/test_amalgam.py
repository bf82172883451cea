import numpy as np
import pytest

from almostdiag.amalgam import CellCover, convolve, local_sup, verify_wiener_convolution, wiener_norm
from almostdiag.errors import EmptyCell
from almostdiag.tfcore import SymbolGrid


def _square(n, d, func):
    ax = (np.arange(n) - n // 2) * d
    X, Y = np.meshgrid(ax, ax, indexing="ij")
    return SymbolGrid(ax, ax.copy(), func(X, Y))


UNIT = CellCover(1.0, 1.0)


def test_local_sup_constant():
    F = _square(64, 0.125, lambda x, y: np.ones_like(x))
    assert np.allclose(local_sup(F, UNIT).values(), 1.0)


def test_local_sup_indicator():
    F = _square(64, 0.125, lambda x, y: ((np.abs(x - 1) < 0.5) & (np.abs(y + 2) < 0.5)).astype(float))
    seq = local_sup(F, UNIT)
    assert seq.entries == {(1, -2): 1}


def test_local_sup_exponential():
    F = _square(128, 0.0625, lambda x, y: np.exp(-np.hypot(x, y)))
    seq = local_sup(F, UNIT)
    for (k, l), v in seq.entries.items():
        # distance from 0 to the closed cell, to sample resolution
        dx = max(abs(k) - 0.5, 0.0)
        dy = max(abs(l) - 0.5, 0.0)
        assert abs(v) == pytest.approx(np.exp(-np.hypot(dx, dy)), rel=1e-12)


def test_empty_cell():
    F = _square(8, 1.0, lambda x, y: x)
    with pytest.raises(EmptyCell):
        local_sup(F, CellCover(0.25, 0.25))


def test_wiener_norm_zero_and_bound():
    zero = _square(32, 0.25, lambda x, y: 0 * x)
    assert wiener_norm(zero, UNIT, 1, 1) == 0
    F = _square(128, 0.0625, lambda x, y: np.exp(-2 * np.hypot(x, y)))
    seq = local_sup(F, UNIT)
    half_diag = np.sqrt(2) / 2
    bound = max(np.exp(-np.linalg.norm(k) + 2 * half_diag) for k in seq.entries)
    assert wiener_norm(F, UNIT, 1, 1) <= bound


def test_wiener_norm_grows_for_constant():
    vals = [wiener_norm(_square(n, 0.25, lambda x, y: np.ones_like(x)), UNIT, 1, 1) for n in (32, 64, 128)]
    assert vals[0] < vals[1] < vals[2]


def test_convolve_matches_direct_sum(rng):
    F = _square(8, 0.5, lambda x, y: rng.standard_normal(x.shape))
    G = _square(8, 0.5, lambda x, y: rng.standard_normal(x.shape))
    C = convolve(F, G)
    i, j = 7, 9  # one output sample, by direct summation
    direct = 0.0
    for p in range(8):
        for q in range(8):
            if 0 <= i - p < 8 and 0 <= j - q < 8:
                direct += F.samples[i - p, j - q] * G.samples[p, q]
    assert C.samples[i, j] == pytest.approx(F.cell * direct, abs=1e-12)
    assert C.x[i] == pytest.approx(F.x[0] + G.x[0] + i * F.dx)


def test_verify_indicator_and_zero():
    ind = _square(32, 0.25, lambda x, y: ((np.abs(x) <= 0.5) & (np.abs(y) <= 0.5)).astype(float))
    assert verify_wiener_convolution(ind, ind, UNIT, 1, 1)["ratio"] <= 1
    zero = _square(32, 0.25, lambda x, y: 0 * x)
    assert verify_wiener_convolution(zero, ind, UNIT, 1, 1)["lhs"] == 0


@pytest.mark.parametrize("s", [0.5, 1.0, 2.0])
def test_verify_gaussian(s):
    F = _square(64, 0.125, lambda x, y: np.exp(-np.pi * (x**2 + y**2)))
    rep = verify_wiener_convolution(F, F, UNIT, 1.0, s)
    assert rep["holds"] and rep["ratio"] <= 1
