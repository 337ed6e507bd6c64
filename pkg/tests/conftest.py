"""Acceptance bookkeeping: one PASS/FAIL line per ``criterion`` marker.

A criterion passes when every test carrying its marker passes and their
summed run time stays within the marker's ``budget`` (seconds).
"""
from collections import defaultdict

import pytest

_results = defaultdict(lambda: {"name": "", "budget": None, "passed": 0, "failed": 0, "seconds": 0.0})


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, name, budget=None): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, name = mark.args
    entry = _results[number]
    entry["name"] = name
    entry["budget"] = mark.kwargs.get("budget")
    entry["seconds"] += rep.duration
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        if rep.passed:
            entry["passed"] += 1
        elif not rep.skipped:
            entry["failed"] += 1


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_results):
        e = _results[number]
        over = e["budget"] is not None and e["seconds"] > e["budget"]
        ok = e["failed"] == 0 and e["passed"] > 0 and not over
        budget = f" (budget {e['budget']:g} s)" if e["budget"] is not None else ""
        tr.write_line(
            f"criterion {number}: {'PASS' if ok else 'FAIL'}  {e['name']}  "
            f"[{e['passed']} passed, {e['failed']} failed, {e['seconds']:.2f} s{budget}]"
        )
