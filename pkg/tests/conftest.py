import pytest

# (number, label, passed, detail) for every acceptance criterion that ran
ACCEPTANCE = []


@pytest.fixture
def criterion():
    def report(number: int, label: str, passed: bool, detail: str = ""):
        line = f"{'PASS' if passed else 'FAIL'} criterion {number}: {label}"
        if detail:
            line += f" [{detail}]"
        ACCEPTANCE.append((number, line))
        print(line)
        assert passed, line
    return report


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for _, line in sorted(ACCEPTANCE):
        terminalreporter.write_line(line)
