import numpy as np
import pytest

from semgkit import config, synth


@pytest.fixture
def cfg():
    return config.default_config()


@pytest.fixture(scope="session")
def presets():
    return synth.preset_scenarios()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)
