import numpy as np
import pytest

from garchrank import GarchSpec


@pytest.fixture
def dgp1():
    return GarchSpec(0.1, (0.1,), (0.1,))


@pytest.fixture
def dgp2():
    return GarchSpec(0.5, (0.4,), (0.4,))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
