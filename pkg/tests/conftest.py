import os

import hypothesis
import numpy as np
import pytest

from mollow.model import DriveConfig, EmitterParams

hypothesis.settings.register_profile("default", max_examples=60, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.register_profile("thorough", max_examples=500, deadline=None)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# lines collected by tests/test_acceptance.py, echoed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def emitter():
    return EmitterParams(gamma=20.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20261015)


def random_drive(rng, gamma=20.0, strong=2.0):
    """A generic two-colour drive with every field non-zero."""
    return DriveConfig(
        omega_pump=float(rng.uniform(0.1, strong) * gamma),
        omega_probe=float(rng.uniform(0.05, 0.8) * gamma),
        delta_pump=float(rng.uniform(-1.5, 1.5) * gamma),
        delta_pp=float(rng.choice([-1, 1]) * rng.uniform(0.5, 3.0) * gamma),
    )
