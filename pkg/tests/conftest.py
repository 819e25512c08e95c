"""Collects acceptance outcomes and prints one PASS/FAIL line per criterion at the end of the run."""
import pytest

_results: dict[int, tuple[list[str], list[str]]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion this test covers")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    titles, statuses = _results.setdefault(number, ([], []))
    if title not in titles:
        titles.append(title)
    if report.when == "call" or (report.when == "setup" and not report.passed):
        statuses.append("PASS" if report.passed else "SKIP" if report.skipped else "FAIL")


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_results):
        titles, statuses = _results[number]
        verdict = "PASS" if statuses and all(s == "PASS" for s in statuses) else (
            "FAIL" if "FAIL" in statuses else "SKIP")
        terminalreporter.write_line(f"criterion {number}: {verdict}  {'; '.join(titles)}")
