from __future__ import annotations

from collections import defaultdict

_RESULTS: dict = defaultdict(list)
_TITLES: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion covered by the test")


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m is not None:
            _TITLES[m.args[0]] = m.args[1]


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    n = report.nodeid
    for key in report.keywords:
        if key.startswith("criterion_"):
            _RESULTS[int(key.split("_")[1])].append((n, report.outcome, hasattr(report, "wasxfail")))


def pytest_itemcollected(item):
    m = item.get_closest_marker("criterion")
    if m is not None:
        item.keywords[f"criterion_{m.args[0]}"] = True


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_TITLES):
        outcomes = _RESULTS.get(n, [])
        if not outcomes:
            status = "NOT RUN"
        elif any(o == "failed" and not x for _, o, x in outcomes):
            status = "FAIL"
        elif any(x for _, _, x in outcomes):
            status = "XFAIL (stated tolerance not met; companions pass)"
        else:
            status = "PASS"
        tr.write_line(f"criterion {n:2d}: {status:50s} {_TITLES[n]}")
