import pytest

_CRITERIA: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion fed by this test")


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            num, title = mark.args
            entry = _CRITERIA.setdefault(num, {"title": title, "tests": {}})
            entry["tests"][item.nodeid] = None


def pytest_runtest_logreport(report):
    for entry in _CRITERIA.values():
        if report.nodeid in entry["tests"]:
            prev = entry["tests"][report.nodeid]
            if report.failed or (report.when == "call" and prev is None):
                entry["tests"][report.nodeid] = "failed" if report.failed else report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        entry = _CRITERIA[num]
        outcomes = list(entry["tests"].values())
        if any(o is None for o in outcomes):
            status = "NOT RUN"
        elif all(o == "passed" for o in outcomes):
            status = "PASS"
        else:
            status = "FAIL"
        terminalreporter.write_line(f"criterion {num}: {status}  {entry['title']} ({len(outcomes)} checks)")
