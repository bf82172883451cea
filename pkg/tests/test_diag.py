import numpy as np
import pytest

import oracles
from conftest import gaussian
from almostdiag.catalog import SYMBOLS, WINDOWS
from almostdiag.diag import (
    DecayFit,
    Envelope,
    decay_pipeline,
    envelope,
    fit_decay,
    gram_envelope,
    mtilde_membership,
    verify_equivalence,
)
from almostdiag.errors import AllBelowFloor, InsufficientData, NotInCatalog
from almostdiag.frames import Lattice
from almostdiag.tfcore import Grid, SymbolGrid
from almostdiag.weyl import GaborMatrix

GRID = Grid.square(128)
LAT = Lattice(GRID, 8, 8)
g_src = WINDOWS["gaussian"].sample


def _line(values):
    k = np.arange(-10, 11)
    return Envelope(np.column_stack([k, np.zeros_like(k)]).astype(float), values(np.abs(k)))


def test_envelope_identity_and_zero():
    lat = Lattice(Grid.square(64), 8, 8)
    env = envelope(GaborMatrix(lat, np.eye(lat.size)))
    assert env.value_at((0, 0)) == 1
    assert np.all(env.H[np.linalg.norm(env.z, axis=1) > 0] == 0)
    assert not np.any(envelope(GaborMatrix(lat, np.zeros((lat.size, lat.size)))).H)


def test_gram_envelope_matches_overlap():
    env = gram_envelope(gaussian(GRID), LAT)
    near = env.radii <= 3
    assert np.max(np.abs(env.H[near] - oracles.gaussian_overlap(env.z[near]))) <= 1e-10


def test_fit_exact_exponential():
    fit = fit_decay(_line(lambda r: np.exp(-r)), 1.0)
    assert fit.epsilon == pytest.approx(1, abs=1e-9)
    assert fit.C == pytest.approx(1, abs=1e-9)
    assert fit.r2 == pytest.approx(1, abs=1e-9)
    assert fit.certified


def test_fit_gram_envelope():
    fit = fit_decay(gram_envelope(gaussian(GRID), LAT), 0.5, floor=1e-14)
    assert fit.epsilon == pytest.approx(np.pi / 2, rel=0.1)
    assert fit.max_violation <= 1 + 1e-9 and fit.certified


def test_fit_random_noise_fails(rng):
    fit = fit_decay(_line(lambda r: rng.uniform(0.5, 1.5, r.shape)), 1.0)
    assert abs(fit.epsilon) < 0.1
    assert not fit.certified


def test_fit_errors():
    with pytest.raises(InsufficientData):
        fit_decay(Envelope(np.zeros((3, 2)), np.ones(3)), 1.0)
    with pytest.raises(AllBelowFloor):
        fit_decay(_line(lambda r: 1e-20 * np.ones_like(r, dtype=float)), 1.0)


def test_decay_fit_bound():
    f = DecayFit(1.0, 2.0, 3.0, 1.0, 1.0, 10)
    assert f.bound([0, 1]) == pytest.approx([3, 3 * np.exp(-2)])
    assert f.to_dict()["certified"]


def test_membership_gaussian():
    rep = mtilde_membership(SYMBOLS["gaussian2d"], g_src, 0.5, 0.5)
    assert not rep["grows_with_box"] and rep["norm_value"] > 0


def test_membership_zero():
    rep = mtilde_membership(lambda x, xi: 0 * x, g_src, 0.5, 0.5)
    assert rep["norm_value"] == 0 and not rep["grows_with_box"]


def test_membership_chirp_grows():
    rep = mtilde_membership(SYMBOLS["chirp"], g_src, 2.0, 0.5)
    assert rep["grows_with_box"]


@pytest.mark.parametrize("sid, s", [("gaussian2d", 0.5), ("cosx", 1.0), ("constant", 0.5)])
def test_verify_equivalence_certifies(sid, s):
    rep = verify_equivalence(SYMBOLS[sid], g_src, LAT, s)
    for part in ("A_continuous", "B_discrete", "C_envelope"):
        assert rep[part]["certified"], part
        assert rep[part]["fit"]["epsilon"] > 0
    assert rep["certified"] and rep["hermitian_defect"] <= 1e-10


def test_identity_envelope_is_gram():
    one = SymbolGrid.for_weyl(GRID, SYMBOLS["constant"])
    from almostdiag.weyl import gabor_matrix

    a = envelope(gabor_matrix(one, gaussian(GRID), LAT))
    b = gram_envelope(gaussian(GRID), LAT)
    assert np.array_equal(a.H, b.H)


def test_growing_symbol_fails():
    assert not decay_pipeline(SYMBOLS["growing"], g_src, LAT, 1.0)["certified"]


def test_verify_rejects_non_gevrey():
    with pytest.raises(NotInCatalog):
        verify_equivalence(SYMBOLS["chirp"], g_src, LAT, 1.0)
    with pytest.raises(NotInCatalog):
        verify_equivalence(SYMBOLS["cosx"], g_src, LAT, 0.5)


def test_dual_window_rows():
    rep = verify_equivalence(SYMBOLS["gaussian2d"], g_src, LAT, 0.5, use_dual=True)
    assert rep["dual_window_rows"] and rep["certified"]
