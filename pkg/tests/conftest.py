import pytest

from acceptance_log import LINES


def pytest_terminal_summary(terminalreporter):
    if not LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(LINES):
        terminalreporter.write_line(LINES[key])


@pytest.fixture
def rng():
    import numpy as np
    return np.random.default_rng(20261014)
