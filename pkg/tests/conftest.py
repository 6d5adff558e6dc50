import pytest

ACCEPTANCE_LINES = []


@pytest.fixture
def record():
    """Record one acceptance-criterion verdict line for the terminal summary."""

    def _record(cid, ok, detail):
        ACCEPTANCE_LINES.append(f"{cid:<4} {'PASS' if ok else 'FAIL'}  {detail}")
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
