import os
import re
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

_CRITERION = re.compile(r"test_criterion_(\d+)")
_outcomes = {}  # criterion -> list of (nodeid, passed)
_notes = {}  # criterion -> measured values worth printing


def _criterion_of(nodeid):
    m = _CRITERION.search(nodeid)
    return int(m.group(1)) if m and "test_acceptance" in nodeid else None


@pytest.fixture
def note(request):
    """Attach measured values to the acceptance line of the calling test."""
    c = _criterion_of(request.node.nodeid)

    def add(text):
        _notes.setdefault(c, []).append(text)

    return add


def pytest_runtest_logreport(report):
    c = _criterion_of(report.nodeid)
    if c is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _outcomes.setdefault(c, []).append((report.nodeid, report.outcome == "passed"))


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for c in sorted(_outcomes):
        ok = all(p for _, p in _outcomes[c])
        detail = "; ".join(_notes.get(c, []))
        tr.write_line(f"criterion {c:2d}: {'PASS' if ok else 'FAIL'}" + (f"  ({detail})" if detail else ""))
