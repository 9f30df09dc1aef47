import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from pmheat import RadialGrid  # noqa: E402


@pytest.fixture(scope="session")
def grid():
    return RadialGrid()


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
