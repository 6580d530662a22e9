import numpy as np
import pytest
from hypothesis import settings

from rarpinn._accel import HAVE_NUMBA, use_numba

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@pytest.fixture(params=["numba", "numpy"])
def kernel_path(request):
    """Run a test once per kernel implementation."""
    if request.param == "numba" and not HAVE_NUMBA:
        pytest.skip("numba not installed")
    previous = use_numba(request.param == "numba")
    yield request.param
    use_numba(previous)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    from helpers import ACCEPTANCE_LINES

    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
