import math

import pytest
from hypothesis import settings

from dqdbattery.ergotropy import QubitHamiltonian

settings.register_profile("default", max_examples=200, deadline=None)
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []

SQRT5 = math.sqrt(5.0)


@pytest.fixture
def h11():
    return QubitHamiltonian(1.0, 1.0)


@pytest.fixture
def record_criterion():
    """Collect a one-line verdict for the acceptance summary."""

    def record(number: int, name: str, ok: bool, detail: str = ""):
        ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {name}  {detail}".rstrip())
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
