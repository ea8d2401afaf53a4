import pytest

from musielak.domain import Domain

ACCEPTANCE_RESULTS = {}


def record_acceptance(number: int, title: str, passed: bool, detail: str = ""):
    ACCEPTANCE_RESULTS[number] = (title, passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        title, passed, detail = ACCEPTANCE_RESULTS[number]
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {number}: {status}  {title}  {detail}".rstrip())


@pytest.fixture(scope="session")
def unit_interval():
    return Domain.box([[0.0, 1.0]], 1025)


@pytest.fixture(scope="session")
def unit_square():
    return Domain.box([[0.0, 1.0], [0.0, 1.0]], 65)
