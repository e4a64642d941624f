import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

from nearopt.model import ExplorationSpec, strip_model
from nearopt.oracle import setup_exploration
from nearopt.regions import Halfspace, OuterApprox

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def tri():
    return setup_exploration(strip_model(), ExplorationSpec(explored=("x1", "x2"), epsilon=0.5))


@pytest.fixture
def box():
    return OuterApprox(np.zeros(2), np.ones(2))


@pytest.fixture
def tri_outer():
    return OuterApprox(np.zeros(2), np.ones(2), (Halfspace(np.array([1.0, 1.0]), 1.5, "cost-cut"),
                                                 Halfspace(np.array([-1.0, -1.0]), -1.0, "model-row")))


ACCEPTANCE_LINES = []


@pytest.fixture
def report(request):
    """Record one PASS/FAIL line for an acceptance criterion."""

    def _report(criterion, ok, detail=""):
        line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'}" + (f"  {detail}" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
