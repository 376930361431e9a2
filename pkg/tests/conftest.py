import numpy as np
import pytest
from hypothesis import settings

from nlslab.model import ModelConfig, build

settings.register_profile("nlslab", deadline=None, max_examples=50)
settings.load_profile("nlslab")


@pytest.fixture(scope="session")
def model8():
    return build(ModelConfig(D=8, seed=0))


@pytest.fixture(scope="session")
def model_cache():
    cache = {}

    def get(D, seed=0):
        key = (D, seed)
        if key not in cache:
            cache[key] = build(ModelConfig(D=D, seed=seed))
        return cache[key]

    return get


def random_complex(rng, n):
    return rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
