"""Property-based checks on randomly drawn inputs."""
import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from almostdiag.seqspace import LatticeSeq, involution, seq_norm, verify_convolution_inequality
from almostdiag.tfcore import Grid, SampledSignal, SymbolGrid, fourier, stft, tf_shift, wigner_symbol
from almostdiag.weyl import weak_form_check, symplectic_pairing

GRID = Grid.square(32)
finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)
signals = arrays(np.complex128, 32, elements=st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False))
PROP = settings(max_examples=30, deadline=None)


def _seq(draw_vals):
    return LatticeSeq({k - len(draw_vals) // 2: v for k, v in enumerate(draw_vals)})


@PROP
@given(signals, st.integers(-16, 15), st.integers(-16, 15))
def test_tf_shift_is_unitary(v, m, k):
    f = SampledSignal(GRID, v)
    g = tf_shift(f, (m * GRID.delta, k * GRID.dfreq))
    assert np.isclose(g.norm(), f.norm(), rtol=1e-12, atol=1e-12)


@PROP
@given(signals)
def test_parseval(v):
    f = SampledSignal(GRID, v)
    assert np.isclose(fourier(f).norm(), f.norm(), rtol=1e-12, atol=1e-12)


@PROP
@given(signals)
def test_wigner_is_real(v):
    f = SampledSignal(GRID, v)
    W = wigner_symbol(f, f).samples
    assert np.max(np.abs(W.imag)) <= 1e-10 * max(1.0, np.max(np.abs(W)))


@PROP
@given(signals, signals)
def test_stft_moyal(v, w):
    f, g = SampledSignal(GRID, v), SampledSignal(GRID, w)
    if g.norm() == 0:
        return
    V = stft(f, g)
    energy = GRID.delta * GRID.dfreq * np.sum(np.abs(V) ** 2)
    assert np.isclose(energy, f.norm() ** 2 * g.norm() ** 2, rtol=1e-10, atol=1e-10)


@PROP
@given(arrays(np.float64, (64, 32), elements=finite), signals, signals)
def test_weak_form_random_symbol(A, v, w):
    a = SymbolGrid.for_weyl(GRID, samples=A)
    assert weak_form_check(a, SampledSignal(GRID, v), SampledSignal(GRID, w)) <= 1e-10


@PROP
@given(st.lists(st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False), min_size=1, max_size=15),
       st.lists(st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False), min_size=1, max_size=15),
       st.sampled_from([0.5, 1.0, 2.0]), st.floats(0.1, 2.0))
def test_convolution_inequality(a, b, s, r):
    rep = verify_convolution_inequality(_seq(a), _seq(b), r, s)
    assert rep["ratio"] <= 1.0


@PROP
@given(st.lists(st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False), min_size=1, max_size=15),
       st.floats(0.0, 2.0), st.floats(0.3, 3.0))
def test_involution_preserves_norm(a, r, s):
    A = _seq(a)
    assert np.isclose(seq_norm(involution(A), r, s), seq_norm(A, r, s), rtol=1e-14)


@PROP
@given(finite, finite, finite, finite)
def test_symplectic_pairing_antisymmetric(a, b, c, d):
    assert symplectic_pairing((a, b), (c, d)) == -symplectic_pairing((c, d), (a, b))
