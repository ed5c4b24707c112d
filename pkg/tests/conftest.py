import numpy as np
import pytest

from ldflows import make_builtin


@pytest.fixture
def tilt():
    return make_builtin("linear_tilt", g=0.5, x_min=-5.0, x_max=5.0)


@pytest.fixture
def loading():
    return make_builtin("quadratic_loading", speed=1.0, x_min=-2.0, x_max=2.0)


@pytest.fixture
def double_well():
    return make_builtin("double_well_loading", stiffness=1.0, tilt0=-0.2, tilt_rate=0.8,
                        x_min=-2.0, x_max=2.0, T=1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
