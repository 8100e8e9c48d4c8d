"""Shared pytest wiring: acceptance tests report one PASS/FAIL line each.

Tests marked ``@pytest.mark.acceptance(num, name)`` are collected into a
summary section printed at the end of the run, so the eight headline
guarantees are visible at a glance even inside a long -v listing.
"""

import pytest

_RESULTS: dict[int, list] = {}


def pytest_configure(config):
    config.addinivalue_line(
        "markers",
        "acceptance(num, name): record the test outcome as acceptance "
        "criterion `num` labelled `name` in the terminal summary")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None:
        return
    num, name = mark.args
    entry = _RESULTS.setdefault(num, [name, True])
    if report.when == "call":
        entry[1] = entry[1] and report.passed
    elif report.failed:
        # setup/teardown crash counts as a failed criterion
        entry[1] = False


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_RESULTS):
        name, ok = _RESULTS[num]
        terminalreporter.write_line(
            "criterion %d (%s): %s" % (num, name, "PASS" if ok else "FAIL"))
