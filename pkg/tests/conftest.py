import numpy as np
import pytest

from sase.channel import random_channel

# default operating point of the experiments
DEFAULT_DIMS = dict(n_r=36, n_t=144, m_rf=6, n_rf=8, num_paths=4, m=20)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def default_channel(rng):
    return random_channel(rng, DEFAULT_DIMS["n_r"], DEFAULT_DIMS["n_t"], DEFAULT_DIMS["num_paths"])


@pytest.fixture
def small_channel(rng):
    return random_channel(rng, 8, 12, 3)
