import numpy as np
import pytest
from hypothesis import strategies as st

from heislab.operators.heis_core import BoxRegion, CellGrid, HeisPoint
from heislab.runner.corpus import load_corpus

coordinates = st.floats(min_value=-10.0, max_value=10.0, allow_nan=False, allow_infinity=False)


@st.composite
def heis_points(draw, n: int = 1):
    z = draw(st.lists(coordinates, min_size=2 * n, max_size=2 * n))
    return HeisPoint(np.array(z), draw(coordinates))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def corpus():
    return load_corpus()


@pytest.fixture(scope="session")
def small_grid():
    """H^1 box split into 8 x 8 x 16 cells"""
    return CellGrid.isotropic(BoxRegion.isotropic(1, 1.2, 0.8), 8, 16)


@pytest.fixture(scope="session")
def sparse_grid():
    return CellGrid.isotropic(BoxRegion.isotropic(1, 1.2, 0.8), 12, 24)
