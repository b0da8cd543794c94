import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=50, deadline=None)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def qubit_system():
    from hamctrl.core import SIGMA_X, SIGMA_Z
    from hamctrl.dynamics import ControlSystem

    return ControlSystem(SIGMA_Z, (SIGMA_X,), ("x",))
