import pytest

ACCEPTANCE_LINES = []


@pytest.fixture
def report():
    def _report(label, result):
        line = f"criterion {label}: {result.line()}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return result
    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
