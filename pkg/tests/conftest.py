import pytest

from rigidity.family import AlphaFamily
from rigidity.sequence import build_sequence


@pytest.fixture(scope="session")
def family():
    return AlphaFamily()


@pytest.fixture(scope="session")
def seq64(family):
    """The reference build: 4 stages, 4 base sequences, 64 interleaved terms."""
    return build_sequence(family, 4, 4, 64)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
