from fractions import Fraction

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("lumpkit", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("lumpkit")

HALF = Fraction(1, 2)


@pytest.fixture(scope="session")
def half():
    return HALF
