import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from reflsos.model import random_params

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=[1, 2, 3])
def small_params(request):
    return random_params(request.param, 11 * request.param)
