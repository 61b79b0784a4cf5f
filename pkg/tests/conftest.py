import os
import time

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    max_examples=25,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

_REPORT = []
_START = time.time()
SUITE_BUDGET_S = 15 * 60


def report(criterion, passed, detail):
    """Record one acceptance line; printed again in the terminal summary."""
    line = f"criterion {criterion}: {'PASS' if passed else 'FAIL'} | {detail}"
    _REPORT.append(line)
    print(line)


@pytest.fixture
def acceptance_report():
    return report


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def pytest_terminal_summary(terminalreporter):
    elapsed = time.time() - _START
    if _REPORT:
        terminalreporter.section("acceptance criteria")
        for line in _REPORT:
            terminalreporter.write_line(line)
        ok = elapsed < SUITE_BUDGET_S
        terminalreporter.write_line(
            f"criterion 7 (suite runtime): {'PASS' if ok else 'FAIL'} | {elapsed:.0f} s against a {SUITE_BUDGET_S} s budget"
        )
