"""Collect acceptance outcomes and print one line per criterion."""
from collections import defaultdict

import pytest

_OUTCOMES = defaultdict(list)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        _OUTCOMES[marker.args[0]].append(report.passed)


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_OUTCOMES):
        results = _OUTCOMES[number]
        status = "PASS" if results and all(results) else "FAIL"
        terminalreporter.write_line(f"criterion {number:2d}: {status} ({sum(results)}/{len(results)} checks)")
