import math

import pytest
from hypothesis import HealthCheck, settings

from cknlab.params import ParamPoint

settings.register_profile(
    "cknlab", deadline=None, max_examples=40, derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("cknlab")

B_FS_M1 = -1.0 + 1.0 / math.sqrt(2.0)


@pytest.fixture(scope="session")
def p_main():
    return ParamPoint(-1.0, -0.25)


@pytest.fixture(scope="session")
def p_k0():
    return ParamPoint(-1.0, -0.1)


@pytest.fixture(scope="session")
def p_fs():
    return ParamPoint(-1.0, -0.2928932)


ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for num in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[num])
