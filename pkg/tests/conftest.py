import pytest

_LINES = []


@pytest.fixture
def verdict():
    """verdict(tag, ok, detail) prints one PASS/FAIL line and asserts ok."""
    def emit(tag, ok, detail=""):
        line = "%s %s %s" % (tag, "PASS" if ok else "FAIL", detail)
        print(line)
        _LINES.append(line)
        assert ok, line
    return emit


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance")
        for line in _LINES:
            terminalreporter.write_line(line)
