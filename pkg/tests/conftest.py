import os
import sys

import numpy as np

import pytest
from hypothesis import HealthCheck, settings

from curved_rnbp import polygon

settings.register_profile(
    "repo",
    max_examples=int(os.environ.get("HYPOTHESIS_MAX_EXAMPLES", "200")),
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")


@pytest.fixture(scope="session")
def s2_triangle():
    return polygon("s2", 3, 0.5)


@pytest.fixture(scope="session")
def h2_triangle():
    return polygon("h2", 3, 0.5)


@pytest.fixture(scope="session", params=["s2", "h2"])
def triangle(request):
    return polygon(request.param, 3, 0.5)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for key in sorted(lines, key=int):
            terminalreporter.write_line(lines[key])
