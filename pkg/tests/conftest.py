import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from almostdiag.catalog import WINDOWS  # noqa: E402
from almostdiag.tfcore import Grid, SampledSignal  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def grid64():
    return Grid.square(64)


@pytest.fixture(scope="session")
def grid256():
    return Grid(256, 1 / 16)


def gaussian(grid):
    return WINDOWS["gaussian"].sample(grid)


def hermite1(grid):
    return WINDOWS["hermite1"].sample(grid)


def random_signal(grid, rng):
    return SampledSignal(grid, rng.standard_normal(grid.N) + 1j * rng.standard_normal(grid.N))
