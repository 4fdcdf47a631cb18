import warnings

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from fermiscat.model import FieldModel

settings.register_profile("fermiscat", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("fermiscat")

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def small_model():
    """Two boson modes, n_max=2, with ancilla: dim 72."""
    return FieldModel.build(n_k=2, coupling=0.7, travel=2.0)


@pytest.fixture(scope="session")
def default_model():
    return FieldModel.build(coupling=0.5)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(autouse=True)
def _quiet_truncation():
    from fermiscat.evolve import TruncationWarning

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        yield


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
