import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from cayley_sobolev.cayley import GroupSpec, build_ball

settings.register_profile(
    "default", max_examples=40, deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def z1_ball():
    return build_ball(GroupSpec.lattice(1), 12)


@pytest.fixture(scope="session")
def z2_ball():
    return build_ball(GroupSpec.lattice(2), 8)


@pytest.fixture(scope="session")
def z3_ball():
    return build_ball(GroupSpec.lattice(3), 6)


@pytest.fixture(scope="session")
def heis_ball():
    return build_ball(GroupSpec.heisenberg(), 4)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# ---------------------------------------------------------------------------
# acceptance summary: one line per criterion at the end of the session

ACCEPTANCE_LINES: dict = {}


@pytest.fixture
def record_criterion(request):
    """Call with (number, title, passed, detail); the line is printed at exit."""

    def record(number, title, passed, detail=""):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2}: {title} -- {detail}"
        ACCEPTANCE_LINES[number] = line
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
