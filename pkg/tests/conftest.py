import re
from collections import defaultdict

_ACCEPT = re.compile(r"test_acceptance\.py::test_c(\d+)_(\w+)")
_outcomes = defaultdict(dict)


def pytest_runtest_logreport(report):
    m = _ACCEPT.search(report.nodeid)
    if not m:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _outcomes[int(m.group(1))][m.group(2)] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for c in sorted(_outcomes):
        parts = _outcomes[c]
        bad = sorted(k for k, v in parts.items() if v != "passed")
        line = f"criterion {c:2d}: {'FAIL' if bad else 'PASS'}"
        if bad:
            line += "  (failing: " + ", ".join(bad) + ")"
        terminalreporter.write_line(line)
