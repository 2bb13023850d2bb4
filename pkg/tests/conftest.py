import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

_acceptance_lines = []


@pytest.fixture
def acceptance_report():
    """Record one pass/fail line per release criterion.

    Lines are printed immediately (visible with -s or on failure) and
    replayed in a terminal-summary section, which survives pytest's
    fd-level capture.
    """
    def _report(number: int, ok: bool, name: str, detail: str) -> None:
        line = (f"criterion {number:2d} [{'PASS' if ok else 'FAIL'}] "
                f"{name}: {detail}")
        _acceptance_lines.append(line)
        print(line)
    return _report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)
