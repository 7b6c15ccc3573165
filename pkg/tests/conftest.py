import numpy as np
import pytest

from exclusion_zone.analytics import NetworkConfig


@pytest.fixture
def cfg():
    """Default network: rc=1 km, alpha=3, a=150, P_d=16 dBm."""
    return NetworkConfig()


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)
