import numpy as np
import pytest

try:
    from hypothesis import settings
    settings.register_profile("ci", deadline=None, max_examples=50)
    settings.load_profile("ci")
except ImportError:
    pass


@pytest.fixture
def rng():
    return np.random.default_rng(0)
