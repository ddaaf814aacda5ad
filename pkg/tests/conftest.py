import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from distcomp.funclass import SingleLetterFunction

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

HK_COUNTEREXAMPLE = ((0, 1, 2), (0, 3, 3))
HK_ROWS_INJECTIVE = ((0, 1, 2), (0, 3, 4))
HK_COLUMNS_INJECTIVE = ((0, 1, 2), (3, 3, 3))
POSITIVE_2X2 = np.array([[0.4, 0.1], [0.15, 0.35]])


@pytest.fixture
def hk_counterexample():
    return SingleLetterFunction.from_array(HK_COUNTEREXAMPLE)


@pytest.fixture
def positive_joint():
    return POSITIVE_2X2.copy()
