"""Collects acceptance outcomes and prints one PASS/FAIL line per criterion."""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

_RESULTS = {}


def pytest_runtest_logreport(report):
    marker = dict(report.user_properties).get("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        detail = dict(report.user_properties).get("detail", "")
        _RESULTS[marker] = (report.outcome, detail)


def pytest_runtest_setup(item):
    m = item.get_closest_marker("acceptance")
    if m is not None and m.args:
        item.user_properties.append(("criterion", m.args[0]))


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, (outcome, detail) in _RESULTS.items():
        status = "PASS" if outcome == "passed" else "FAIL"
        line = f"{status}  {name}"
        terminalreporter.write_line(f"{line}  [{detail}]" if detail else line)
