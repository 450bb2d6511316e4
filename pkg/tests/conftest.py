"""Prints one PASS/FAIL line per acceptance criterion at the end of the run."""

_results = {}


def _criterion(item):
    mark = item.get_closest_marker("criterion")
    return None if mark is None else (mark.args[0], mark.args[1])


def pytest_collection_modifyitems(items):
    for item in items:
        c = _criterion(item)
        if c is not None:
            _results.setdefault(c, [])


def pytest_runtest_makereport(item, call):
    c = _criterion(item)
    if c is not None and call.when == "call":
        _results[c].append(call.excinfo is None)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for (number, title), outcomes in sorted(_results.items()):
        if not outcomes:
            status = "NOT RUN"
        else:
            status = "PASS" if all(outcomes) else "FAIL"
        terminalreporter.write_line(f"criterion {number}: {status}  {title}")
