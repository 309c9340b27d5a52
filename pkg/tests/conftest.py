import random

import pytest

from dyneq.statevec import audit

NORM_TOLERANCE = 1e-10

_criteria: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    audit.enabled = True


@pytest.fixture
def rng():
    return random.Random(1234)


def pytest_runtest_logreport(report):
    if "test_acceptance.py::test_criterion_" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        num = int(report.nodeid.split("test_criterion_")[1].split("_")[0])
        name = report.nodeid.split("::")[-1]
        _criteria[num] = ("PASS" if report.outcome == "passed" else "FAIL", name)


def pytest_terminal_summary(terminalreporter):
    if _criteria:
        terminalreporter.section("acceptance criteria")
        for num in sorted(_criteria):
            status, name = _criteria[num]
            terminalreporter.write_line(f"criterion {num}: {status}  ({name})")
    terminalreporter.write_line(
        f"norm audit: {audit.checks} checks, worst deviation {audit.max_deviation:.2e} "
        f"(limit {NORM_TOLERANCE:g})")


def pytest_sessionfinish(session, exitstatus):
    if audit.checks and audit.max_deviation > NORM_TOLERANCE and session.exitstatus == 0:
        session.exitstatus = 1
