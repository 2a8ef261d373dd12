import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from rmfs_poa.fixtures import random_state

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=400, deadline=None)
settings.load_profile("default")


@st.composite
def tiny_states(draw, residual=False, with_forced=True, num_stations=2):
    seed = draw(st.integers(0, 2**32 - 1))
    return random_state(np.random.default_rng(seed), num_stations=num_stations,
                        with_forced=with_forced, residual=residual)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
