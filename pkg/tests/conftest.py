import math

import pytest
from hypothesis import settings

from fano_qed.coupling import SystemSpec

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")

ACCEPTANCE_LINES = []


@pytest.fixture
def spec_factory():
    def make(t=0.5, sigma=0.2, omega=1.0, **kw):
        return SystemSpec(omega=omega, sigma=sigma, t_bg=t, **kw)

    return make


@pytest.fixture
def fig_spec():
    return SystemSpec(omega=1.0, sigma=0.2, t_bg=0.5, chi=math.inf)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
