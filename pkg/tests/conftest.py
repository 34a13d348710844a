import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from nlmaxwell.grid import GridSpec
from nlmaxwell.material import Coefficient, MaterialParams

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES: dict[int, str] = {}


def kerr(side=24.0, n=48, k=1.0, V0=0.5, gamma=1.0, omega=1.0, p=4.0, **kw):
    grid = GridSpec(side, n)
    return MaterialParams.from_coefficients(grid, k, omega, p, Coefficient("constant", V0),
                                            Coefficient("constant", gamma), **kw)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(scope="session")
def small_kerr():
    return kerr(24.0, 48)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
