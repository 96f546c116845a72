import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def seasonal_random_walk(rng, n, start=None):
    """(1 - L^4) y = e with zero start values."""
    e = rng.standard_normal(n)
    y = e.copy()
    for t in range(4, n):
        y[t] += y[t - 4]
    return y


_ACCEPTANCE = {}


@pytest.fixture
def criterion():
    """Record one acceptance criterion as a PASS/FAIL line for the summary."""

    def record(number, title, passed, detail=""):
        line = f"criterion {number:>2} {'PASS' if passed else 'FAIL'}  {title}"
        if detail:
            line += f"  [{detail}]"
        _ACCEPTANCE[number] = line
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for number in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[number])
