import pytest

from stochain import make_config

_ACCEPTANCE_LINES = []


@pytest.fixture
def cfg():
    return make_config()


@pytest.fixture
def small_cfg():
    return make_config(N=100, time_steps=50)


@pytest.fixture
def acceptance_log():
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
