"""Shared fixtures, plus end-of-run reporting for the acceptance gate."""

import pytest

_CRITERION_LINES = []


@pytest.fixture
def criterion_report():
    """Record one [PASS]/[FAIL] line per acceptance criterion.

    Lines are echoed immediately and replayed in a terminal summary section,
    so they are visible regardless of output capture settings.
    """

    def _record(criterion: str, ok: bool, detail: str) -> None:
        line = f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}"
        _CRITERION_LINES.append(line)
        print(line)
        assert ok, line

    return _record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _CRITERION_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _CRITERION_LINES:
            terminalreporter.write_line(line)
