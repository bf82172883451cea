import numpy as np
import pytest

import oracles
from conftest import gaussian, hermite1, random_signal
from almostdiag.catalog import SYMBOLS, WINDOWS
from almostdiag.errors import MidpointUnrepresentable, ShapeMismatch
from almostdiag.frames import Lattice
from almostdiag.tfcore import Grid, PhasePoint, SampledSignal, SymbolGrid, fourier, ifourier
from almostdiag.weyl import (
    gabor_matrix,
    j_map,
    magic_formula_check,
    magic_pair_values,
    random_pairs,
    symplectic_pairing,
    weak_form_check,
    weyl_apply,
    weyl_kernel,
)


def test_identity_symbol(grid64):
    a = SymbolGrid.for_weyl(grid64, SYMBOLS["constant"])
    K = weyl_kernel(a)
    assert np.allclose(K, np.eye(64) / grid64.delta, atol=1e-10)
    for w in WINDOWS.values():
        f = w.sample(grid64)
        assert (weyl_apply(a, f) - f).norm() <= 1e-10


def test_position_symbol(grid64):
    f = gaussian(grid64)
    a = SymbolGrid.for_weyl(grid64, SYMBOLS["x"])
    out = weyl_apply(a, f)
    assert np.max(np.abs(out.samples - grid64.points * f.samples)) <= 1e-10


def test_frequency_symbol(grid64):
    f = hermite1(grid64)
    a = SymbolGrid.for_weyl(grid64, SYMBOLS["xi"])
    fh = fourier(f)
    ref = ifourier(SampledSignal(fh.grid, fh.grid.points * fh.samples))
    assert (weyl_apply(a, f) - ref).norm() <= 1e-8


def test_kernel_matches_oracle(grid64, rng):
    a = SymbolGrid.for_weyl(grid64, samples=rng.standard_normal((128, 64)) + 1j * rng.standard_normal((128, 64)))
    assert np.max(np.abs(weyl_kernel(a) - oracles.weyl_kernel(a))) <= 1e-10


def test_layout_required(grid64):
    with pytest.raises(ShapeMismatch):
        weyl_kernel(SymbolGrid.square(64, lambda x, xi: x))


@pytest.mark.parametrize("sid", ["constant", "gaussian2d", "cosx", "chirp"])
def test_weak_form(sid, grid64, rng):
    a = SymbolGrid.for_weyl(grid64, SYMBOLS[sid])
    f, g = random_signal(grid64, rng), gaussian(grid64)
    assert weak_form_check(a, f, g) <= 1e-8


def test_weak_form_identity_and_selfadjoint(grid64, rng):
    f, g = random_signal(grid64, rng), random_signal(grid64, rng)
    one = SymbolGrid.for_weyl(grid64, SYMBOLS["constant"])
    assert weyl_apply(one, f).inner(g) == pytest.approx(f.inner(g), abs=1e-10)
    a = SymbolGrid.for_weyl(grid64, SYMBOLS["cosx"])
    assert abs(weyl_apply(a, f).inner(f).imag) <= 1e-10


def test_gram_matrix_oracle():
    grid = Grid.square(128)
    lat = Lattice(grid, 8, 8)
    one = SymbolGrid.for_weyl(grid, SYMBOLS["constant"])
    M = gabor_matrix(one, gaussian(grid), lat)
    pts = lat.points()
    inner = (np.abs(pts[:, 0]) <= 2) & (np.abs(pts[:, 1]) <= 2)
    idx = np.nonzero(inner)[0]
    diff = pts[idx][:, None, :] - pts[idx][None, :, :]
    assert np.max(np.abs(np.abs(M.entries[np.ix_(idx, idx)]) - oracles.gaussian_overlap(diff))) <= 1e-10


def test_gabor_matrix_zero_and_hermitian(grid64):
    lat = Lattice(grid64, 4, 4)
    zero = SymbolGrid.for_weyl(grid64, samples=np.zeros((128, 64)))
    assert not np.any(gabor_matrix(zero, gaussian(grid64), lat).entries)
    a = SymbolGrid.for_weyl(grid64, SYMBOLS["gaussian2d"])
    assert gabor_matrix(a, gaussian(grid64), lat).hermitian_defect() <= 1e-10


def test_magic_formula_origin(grid64):
    a = SymbolGrid.for_weyl(grid64, SYMBOLS["constant"])
    g = gaussian(grid64)
    lhs, rhs = magic_pair_values(a, g, [(PhasePoint(0, 0), PhasePoint(0, 0))])
    assert lhs[0] == pytest.approx(1.0, abs=1e-12)
    assert abs(lhs[0] - rhs[0]) <= 1e-8


@pytest.mark.parametrize("sid", ["gaussian2d", "cosx"])
def test_magic_formula_random_pairs(sid, rng):
    grid = Grid(128, 1 / np.sqrt(128))
    pairs = random_pairs(grid, 100, rng)
    a = SymbolGrid.for_weyl(grid, SYMBOLS[sid])
    assert magic_formula_check(a, gaussian(grid), pairs, rel=1e-6) <= 1


def test_magic_formula_midpoint(grid64):
    a = SymbolGrid.for_weyl(grid64, SYMBOLS["constant"])
    X, Y = PhasePoint(0, 0), PhasePoint(0, grid64.dfreq)
    with pytest.raises(MidpointUnrepresentable):
        magic_pair_values(a, gaussian(grid64), [(X, Y)])


def test_symplectic_pairing(rng):
    assert symplectic_pairing((1.3, -2), (1.3, -2)) == 0
    assert symplectic_pairing((1, 0), (0, 1)) == -1
    for _ in range(10):
        X, Y = rng.standard_normal(2), rng.standard_normal(2)
        assert symplectic_pairing(X, Y) == -symplectic_pairing(Y, X)
    assert j_map((1.0, 2.0)) == (2.0, -1.0)
