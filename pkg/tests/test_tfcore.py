import numpy as np
import pytest

import oracles
from conftest import gaussian, hermite1, random_signal
from almostdiag.errors import OffGridShift, ShapeMismatch, ZeroWindow
from almostdiag.tfcore import (
    Grid,
    PhasePoint,
    SampledSignal,
    SymbolGrid,
    TFGrid,
    big_stft,
    fourier,
    ifourier,
    mod_norm,
    stft,
    tf_shift,
    wigner,
    wigner_stft_relation_check,
    wigner_symbol,
)


def test_grid_basics():
    g = Grid(256, 1 / 16)
    assert g.length == 16 and g.dfreq == 1 / 16
    assert g.points[0] == -8 and g.points[-1] == 8 - 1 / 16
    assert g.acceptance_box_ok()
    with pytest.raises(ValueError):
        Grid(7, 0.1)
    with pytest.raises(OffGridShift):
        g.steps(0.01)


def test_fourier_gaussian_against_closed_form(grid256):
    f = SampledSignal.from_function(grid256, lambda t: np.exp(-np.pi * t**2))
    fh = fourier(f)
    assert np.max(np.abs(fh.samples - np.exp(-np.pi * grid256.freqs**2))) <= 1e-10
    assert np.max(np.abs(fh.samples - oracles.fourier(f))) <= 1e-10


def test_fourier_spike_is_flat(grid256):
    v = np.zeros(256)
    v[128] = 1 / grid256.delta
    fh = fourier(SampledSignal(grid256, v))
    assert np.allclose(fh.samples, 1.0, atol=1e-12)


def test_fourier_twice_reflects(grid64, rng):
    f = random_signal(grid64, rng)
    ff = fourier(fourier(f)).samples
    assert np.allclose(ff, f.reflected().samples, atol=1e-12)
    assert np.allclose(ifourier(fourier(f)).samples, f.samples, atol=1e-12)


def test_tf_shift(grid64, rng):
    g = random_signal(grid64, rng)
    assert np.array_equal(tf_shift(g, (0, 0)).samples, g.samples)
    assert np.allclose(tf_shift(g, (grid64.delta, 0)).samples, np.roll(g.samples, 1))
    for _ in range(10):
        Z = (rng.integers(-30, 30) * grid64.delta, rng.integers(-30, 30) * grid64.dfreq)
        assert tf_shift(g, Z).norm() == pytest.approx(g.norm(), rel=1e-12)
    with pytest.raises(OffGridShift):
        tf_shift(g, (0.3 * grid64.delta, 0))


def test_stft_gaussian_peak(grid64):
    g = gaussian(grid64)
    V = stft(g, g)
    c = grid64.N // 2
    assert abs(V[c, c]) == pytest.approx(1.0, abs=1e-12)
    assert np.unravel_index(np.argmax(np.abs(V)), V.shape) == (c, c)
    assert np.max(np.abs(V - oracles.stft(g, g))) <= 1e-10


def test_stft_zero_and_zero_window(grid64):
    g = gaussian(grid64)
    assert not np.any(stft(SampledSignal.zeros(grid64), g))
    with pytest.raises(ZeroWindow):
        stft(g, SampledSignal.zeros(grid64))


def test_stft_covariance(grid64, rng):
    f, g = random_signal(grid64, rng), gaussian(grid64)
    m, k = 5, -3
    Z = (m * grid64.delta, k * grid64.dfreq)
    V = np.abs(stft(f, g))
    Vs = np.abs(stft(tf_shift(f, Z), g))
    assert np.allclose(Vs, np.roll(V, (m, k), axis=(0, 1)), atol=1e-12)


def test_wigner_gaussian(grid64):
    g = SampledSignal.from_function(grid64, lambda t: np.exp(-np.pi * t**2))
    tf = TFGrid.central(grid64, 2)
    W = wigner(g, g, tf)
    X, XI = np.meshgrid(tf.time.points, tf.freq.points, indexing="ij")
    expected = np.sqrt(2) * np.exp(-2 * np.pi * (X**2 + XI**2))
    assert np.max(np.abs(W - expected)) <= 1e-10
    assert np.min(W.real) > -1e-12


def test_wigner_real_and_marginal(grid64, rng):
    f = random_signal(grid64, rng)
    W = wigner_symbol(f, f)
    assert np.max(np.abs(W.samples.imag)) <= 1e-10
    total = W.cell * W.samples.real.sum()
    assert total == pytest.approx(f.norm() ** 2, rel=1e-10)


def test_wigner_matches_oracle(grid64, rng):
    f, g = random_signal(grid64, rng), hermite1(grid64)
    assert np.max(np.abs(wigner_symbol(f, g).samples - oracles.wigner_weyl(f, g))) <= 1e-10


@pytest.mark.parametrize("first", [gaussian, hermite1])
def test_wigner_stft_relation(first, grid256):
    tf = TFGrid.central(grid256, 2)
    assert wigner_stft_relation_check(first(grid256), gaussian(grid256), tf) <= 1e-8


def test_wigner_stft_relation_zero(grid64):
    tf = TFGrid.central(grid64, 2)
    assert wigner_stft_relation_check(SampledSignal.zeros(grid64), gaussian(grid64), tf) == 0


def _gauss2(grid):
    return SymbolGrid.for_weyl(grid, lambda x, xi: np.exp(-np.pi * (x**2 + xi**2)))


def test_big_stft_gaussian_peak(grid64):
    a = _gauss2(grid64)
    B = big_stft(a, a, x_stride=8, xi_stride=8)
    p = np.unravel_index(np.argmax(np.abs(B.values)), B.values.shape)
    assert B.X[p[0]] == 0 and B.XI[p[1]] == 0 and B.Xi1[p[2]] == 0 and B.Xi2[p[3]] == 0


def test_big_stft_cauchy_schwarz(grid64, rng):
    a = SymbolGrid.for_weyl(grid64, samples=rng.standard_normal((128, 64)))
    Phi = _gauss2(grid64)
    B = big_stft(a, Phi, x_stride=16, xi_stride=16)
    l2 = lambda F: np.sqrt(F.cell * np.sum(np.abs(F.samples) ** 2))
    assert B.magnitude_sup() <= l2(a) * l2(Phi) * (1 + 1e-12)


def test_big_stft_zero_and_shape(grid64):
    zero = SymbolGrid.for_weyl(grid64, samples=np.zeros((128, 64)))
    assert not np.any(big_stft(zero, _gauss2(grid64), 32, 32).values)
    other = SymbolGrid.square(64, lambda x, xi: x)
    with pytest.raises(ShapeMismatch):
        big_stft(zero, other)


def test_mod_norm():
    grid = Grid.square(64)
    a = _gauss2(grid)
    B = big_stft(a, a, 8, 8)
    assert mod_norm(a, a, 0.0, 1.0) == pytest.approx(B.magnitude_sup(), rel=1e-14)
    zero = SymbolGrid.for_weyl(grid, samples=np.zeros((128, 64)))
    assert mod_norm(zero, a, 1.0, 1.0) == 0.0
    v = mod_norm(a, a, 0.5, 0.5)
    big = Grid.square(256)
    ab = _gauss2(big)
    assert np.isfinite(v) and mod_norm(ab, ab, 0.5, 0.5, 32, 32) <= v * (1 + 1e-9)


def test_phase_point():
    assert PhasePoint(1.0, 2.0).xi == 2.0
