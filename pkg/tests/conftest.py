import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from pathvisc import geometry  # noqa: E402


@pytest.fixture(scope="session")
def conformal2():
    """g = exp(0.4 sin x1) I on the 2-D box."""
    return geometry.ConformalMetric(geometry.ScalarField.sine(2, 0.2))


@pytest.fixture(scope="session")
def flat2():
    return geometry.IdentityMetric(2)


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[k])
