import pytest
from mpmath import mp

from hyperorbit.precision import DEFAULT_DPS


@pytest.fixture(autouse=True)
def _pin_precision():
    """Every test starts from the package default precision."""
    old = mp.dps
    mp.dps = DEFAULT_DPS
    yield
    mp.dps = old
