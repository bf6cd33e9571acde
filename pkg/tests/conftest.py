import numpy as np
import pytest

from dyadlab.geometry import AxisSpec, Window


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def axes1():
    return AxisSpec((1,))


@pytest.fixture
def axes2():
    return AxisSpec((1, 1))


@pytest.fixture
def w1(axes1):
    """Unit interval at resolution 1/4."""
    return Window.unit(axes1, (2,))


@pytest.fixture
def w2(axes2):
    """Unit square at resolution 1/4 per axis."""
    return Window.unit(axes2, (2, 2))
