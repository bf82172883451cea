import numpy as np
import pytest

from almostdiag.catalog import DEFAULT_SYMBOLS, SYMBOLS, WINDOWS, load_symbol, load_window, symbol, window
from almostdiag.arrays import write_array
from almostdiag.errors import NotInCatalog, ShapeMismatch
from almostdiag.tfcore import Grid


@pytest.mark.parametrize("wid", ["gaussian", "hermite1"])
def test_unit_norm_windows(wid):
    g = WINDOWS[wid].sample(Grid(256, 1 / 16))
    assert g.norm() == pytest.approx(1.0, abs=1e-12)


def test_sample_dilation_keeps_norm():
    g = WINDOWS["gaussian"].sample(Grid(256, 1 / 16), center=1.0, width=0.25)
    assert g.norm() == pytest.approx(1.0, abs=1e-12)


def test_symbol_metadata():
    for sid in DEFAULT_SYMBOLS:
        meta = SYMBOLS[sid].metadata()
        assert meta["s_known"] is not None and meta["kind"] == "symbol"
    assert SYMBOLS["growing"].gevrey is False
    d = SYMBOLS["cosx"].derivative_func(2, 0)
    assert d(0.0, 1.0) == pytest.approx(-(2 * np.pi) ** 2)


def test_unknown_ids():
    with pytest.raises(NotInCatalog):
        window("boxcar")
    with pytest.raises(NotInCatalog):
        symbol("sawtooth")


def test_file_inputs(tmp_path):
    grid = Grid.square(16)
    write_array(tmp_path / "w", np.ones(16))
    g, meta = load_window(f"file:{tmp_path / 'w.arr.json'}", grid)
    assert g.samples.shape == (16,) and meta["source"].endswith("w.arr.json")
    write_array(tmp_path / "a", np.ones((32, 16)))
    a, _, entry = load_symbol(f"file:{tmp_path / 'a'}", grid)
    assert entry is None and a.shape == (32, 16)
    write_array(tmp_path / "short", np.ones(8))
    with pytest.raises(ShapeMismatch):
        load_window(f"file:{tmp_path / 'short'}", grid)
