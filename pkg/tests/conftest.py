import pytest

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def record_criterion():
    def record(number: int, title: str, passed: bool, seconds: float, detail: str = ""):
        line = f"criterion {number:>2} {'PASS' if passed else 'FAIL'}  {title}  ({seconds:.2f} s){'  ' + detail if detail else ''}"
        ACCEPTANCE_LINES.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
