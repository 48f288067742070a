import sys
from pathlib import Path

import pytest

TESTS = Path(__file__).parent
ROOT = TESTS.parent
sys.path.insert(0, str(TESTS))

from relfacts.scenario import Encoding  # noqa: E402


@pytest.fixture(params=list(Encoding), ids=lambda e: e.value)
def encoding(request):
    return request.param


@pytest.fixture
def root():
    return ROOT


_criteria: dict[str, tuple[int, str]] = {}
_outcomes: dict[int, list[str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, text): acceptance criterion covered by the test")


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark:
            _criteria[item.nodeid] = mark.args


def pytest_runtest_logreport(report):
    if report.nodeid in _criteria and (report.when == "call" or report.outcome != "passed"):
        number, _ = _criteria[report.nodeid]
        _outcomes.setdefault(number, []).append(report.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    texts = {n: t for n, t in _criteria.values()}
    terminalreporter.section("acceptance criteria")
    for n in sorted(_outcomes):
        status = "PASS" if all(o == "passed" for o in _outcomes[n]) else "FAIL"
        terminalreporter.write_line(f"criterion {n:2d} {status}: {texts[n]}")
