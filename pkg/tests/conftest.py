import os

import numpy as np
import pytest

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")

_ACCEPTANCE = []


def record(criterion, passed, detail):
    """Log one acceptance line; printed together at the end of the session."""
    line = f"[{'PASS' if passed else 'FAIL'}] {criterion}: {detail}"
    _ACCEPTANCE.append(line)
    print(line)
    return passed


@pytest.fixture
def acceptance():
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for line in _ACCEPTANCE:
        terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def fixture_csv():
    return os.path.join(DATA_DIR, "mrw_lambda025.csv")
