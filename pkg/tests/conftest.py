"""Acceptance bookkeeping.

Tests marked ``criterion(n, title)`` are grouped by criterion; the terminal
summary prints one PASS / FAIL / SKIP line per criterion, plus any
diagnostic notes the tests attached through the ``acceptance_note`` fixture.
"""

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_results: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion check")


def _entry(item):
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return None
    number, title = mark.args
    return _results.setdefault(number, {"title": title, "outcomes": [], "notes": []})


@pytest.fixture
def acceptance_note(request):
    entry = _entry(request.node)

    def note(text):
        if entry is not None:
            entry["notes"].append(text)
        print(text)

    return note


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    entry = _entry(item)
    if entry is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        entry["outcomes"].append("skip" if rep.skipped else ("pass" if rep.passed else "fail"))


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_results):
        entry = _results[number]
        outs = entry["outcomes"]
        if outs and all(o == "skip" for o in outs):
            status = "SKIP"
        elif outs and all(o in ("pass", "skip") for o in outs):
            status = "PASS"
        else:
            status = "FAIL"
        tr.write_line(f"criterion {number} [{status}] {entry['title']}")
        for text in entry["notes"]:
            tr.write_line(f"    {text}")
