import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_levels(rng, d, top=4.0):
    lv = np.sort(rng.uniform(0.0, top, d))
    lv[0] = 0.0
    return lv


def random_probs(rng, d):
    p = rng.dirichlet(np.ones(d))
    return p
