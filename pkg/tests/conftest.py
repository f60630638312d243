import pytest

_results = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


@pytest.fixture
def summary(request):
    """Lines of detail to print with the criterion's PASS/FAIL line."""
    lines = []
    request.node._summary_lines = lines
    return lines


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or rep.when != "call":
        return
    n = marker.args[0]
    prev = _results.get(n, (True, []))
    _results[n] = (prev[0] and rep.passed, prev[1] + getattr(item, "_summary_lines", []))


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_results):
        ok, lines = _results[n]
        terminalreporter.write_line(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}")
        for line in lines:
            terminalreporter.write_line(f"    {line}")
