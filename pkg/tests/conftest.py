import pytest
from hypothesis import HealthCheck, settings

from volquote import REFERENCE_PARAMS, VolState

settings.register_profile(
    "volquote", max_examples=200, deadline=None, derandomize=True, database=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("volquote")


@pytest.fixture(scope="session")
def p():
    return REFERENCE_PARAMS


@pytest.fixture(scope="session")
def ref_state():
    return VolState.make(REFERENCE_PARAMS, 0.15, 1.0)
