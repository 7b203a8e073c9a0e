import pytest

ACCEPTANCE_LINES: dict[str, str] = {}


@pytest.fixture
def report(request):
    """Record one pass/fail line for an acceptance criterion."""
    name = request.node.name
    ACCEPTANCE_LINES[name] = f"FAIL {name}"

    def ok(detail: str):
        ACCEPTANCE_LINES[name] = f"PASS {name}: {detail}"

    yield ok
    print(ACCEPTANCE_LINES[name])


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES.values():
            terminalreporter.write_line(line)
