import pytest

CRITERION_LINES: dict[int, str] = {}


@pytest.fixture
def report_criterion():
    def record(number: int, passed: bool, detail: str = "") -> None:
        line = f"Criterion {number}: {'PASS' if passed else 'FAIL'}" + (f" ({detail})" if detail else "")
        CRITERION_LINES[number] = line
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if CRITERION_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(CRITERION_LINES):
            terminalreporter.write_line(CRITERION_LINES[n])
