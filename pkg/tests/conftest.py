import pytest

_CRITERIA: dict[int, str] = {}


@pytest.fixture
def report():
    """Record the one-line verdict for an acceptance criterion."""

    def record(number: int, ok: bool, detail: str):
        _CRITERIA[number] = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        terminalreporter.write_line(_CRITERIA[number])
