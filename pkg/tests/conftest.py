import numpy as np
import pytest
from hypothesis import settings

from semqa import numerics as nm

settings.register_profile("default", deadline=None, max_examples=50)
settings.load_profile("default")


@pytest.fixture(autouse=True)
def float64_mode():
    # numeric contracts are asserted in the reference (64-bit) mode
    nm.set_default_dtype("float64")
    yield
    nm.set_default_dtype("float64")


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
