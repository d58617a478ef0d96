from __future__ import annotations

import pytest

from _support import synthetic_runs
from rollsynth.analysis import best_so_far


@pytest.fixture(scope="session")
def synthetic_records():
    return synthetic_runs()


@pytest.fixture(scope="session")
def synthetic_curves(synthetic_records):
    return [best_so_far(r) for r in synthetic_records]


_CRITERIA: dict[str, tuple[int, str]] = {}
_OUTCOMES: dict[str, str] = {}


def pytest_collection_modifyitems(items):
    for item in items:
        tag = getattr(getattr(item, "function", None), "criterion", None)
        if tag is not None:
            _CRITERIA[item.nodeid] = tag


def pytest_runtest_logreport(report):
    if report.nodeid not in _CRITERIA:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        outcome = "PASS" if report.passed else "SKIP" if report.skipped else "FAIL"
        _OUTCOMES[report.nodeid] = outcome


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid, (n, title) in sorted(_CRITERIA.items(), key=lambda kv: kv[1][0]):
        outcome = _OUTCOMES.get(nodeid, "NOT RUN")
        terminalreporter.write_line(f"[{outcome}] criterion {n:2d}: {title}")
