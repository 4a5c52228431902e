"""Shared test hooks: per-criterion verdict lines after the run."""

import re

import pytest

_PATTERN = re.compile(r"test_criterion_(\d+)")
_verdicts: dict[int, tuple[str, str]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    match = _PATTERN.match(item.name)
    if match is None:
        return
    number = int(match.group(1))
    title = (item.function.__doc__ or item.name).strip().splitlines()[0]
    if report.when == "call":
        _verdicts[number] = ("PASS" if report.passed else "FAIL", title)
    elif report.when == "setup" and not report.passed:
        # fixture error or skip: the criterion was not demonstrated
        _verdicts[number] = ("FAIL", title)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_verdicts):
        status, title = _verdicts[number]
        terminalreporter.write_line(f"criterion {number:2d}: {status}  {title}")
