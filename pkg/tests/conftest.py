import pytest

_results = {}


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    key = mark.args
    if report.when == "call" or (report.when == "setup" and report.failed):
        ok = _results.get(key, True) and report.passed
        _results[key] = ok


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for (number, title), ok in sorted(_results.items()):
        verdict = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"criterion {number:2d}: {verdict}  {title}")
