import pytest

from zetaderiv import dickman

ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture(scope="session")
def rho_table():
    return dickman.default_table()


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
