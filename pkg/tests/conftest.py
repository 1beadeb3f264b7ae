import numpy as np
import pytest

from radcool.model import SystemParams

ACCEPTANCE_LINES = []


@pytest.fixture
def cooling_params():
    """Moderately resolved cooling point used by many quick tests."""
    return SystemParams.from_J(0.5, omega_m=10.0, gamma_m=1e-3, n_th=1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
