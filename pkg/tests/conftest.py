"""Collects acceptance outcomes and prints one PASS/FAIL line per criterion."""

import pytest

_RESULTS = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.fixture
def measured(request):
    """Dict a criterion fills with the quantities it measured."""
    notes = {}
    request.node.user_properties.append(("measured", notes))
    return notes


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or report.when != "call" and not report.failed:
        return
    number, title = mark.args
    notes = dict(item.user_properties).get("measured", {})
    passed = report.passed and _RESULTS.get(number, (True,))[0]
    _RESULTS[number] = (passed, title, notes)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        passed, title, notes = _RESULTS[number]
        detail = ", ".join(f"{k}={_fmt(v)}" for k, v in notes.items())
        line = f"{'PASS' if passed else 'FAIL'} [{number}] {title}"
        terminalreporter.write_line(f"{line}  ({detail})" if detail else line)


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.3g}"
    return str(v)
