import pytest
from hypothesis import HealthCheck, settings

from robjam.scenarios import single_tp_scenario

settings.register_profile("robjam", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("robjam")


@pytest.fixture(scope="session")
def single_tp():
    return single_tp_scenario()
