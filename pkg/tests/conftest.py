"""Shared pytest wiring: per-criterion verdict lines for the acceptance suite.

Tests marked ``@pytest.mark.criterion("<name>")`` get one
``[acceptance] <name>: PASS|FAIL`` line in the terminal summary, where
output capture is off, so the verdicts survive into piped logs.
"""

from __future__ import annotations

import pytest


def pytest_configure(config):
    config.addinivalue_line(
        "markers",
        "criterion(name): emit an [acceptance] verdict line for this test")
    config._acceptance_lines = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    name = marker.args[0]
    lines = item.config._acceptance_lines
    if report.when == "call":
        lines.append(f"[acceptance] {name}: {'PASS' if report.passed else 'FAIL'}")
    elif report.failed:  # setup error or teardown failure counts against it
        lines.append(f"[acceptance] {name}: FAIL")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    for line in getattr(config, "_acceptance_lines", []):
        terminalreporter.write_line(line)
