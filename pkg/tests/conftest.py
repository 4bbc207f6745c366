import pytest

# criterion number -> (title, {nodeid: status})
ACCEPTANCE = {}


@pytest.fixture
def criterion(request):
    """Register the calling test under a numbered acceptance criterion."""

    def register(number, title):
        ACCEPTANCE.setdefault(number, (title, {}))[1][request.node.nodeid] = None

    return register


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when != "call":
        return
    for _, runs in ACCEPTANCE.values():
        if item.nodeid in runs:
            runs[item.nodeid] = "PASS" if report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, runs = ACCEPTANCE[number]
        statuses = set(runs.values())
        status = "FAIL" if "FAIL" in statuses else ("PASS" if statuses == {"PASS"} else "INCOMPLETE")
        suffix = f" ({len(runs)} runs)" if len(runs) > 1 else ""
        terminalreporter.write_line(f"[{status}] criterion {number}: {title}{suffix}")
