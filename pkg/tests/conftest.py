import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

import privmac  # noqa: E402
from privmac.channel import build_control_state  # noqa: E402
from privmac.regions import ToleranceConfig  # noqa: E402
from privmac.split import FiniteDist  # noqa: E402

GOLDEN = Path(__file__).parent / "golden"
DATA = Path(privmac.__file__).parent / "data"


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def qubit_file():
    return privmac.example_channel("qubit_mac")


@pytest.fixture(scope="session")
def qubit_cs(qubit_file):
    return build_control_state(qubit_file.channel, qubit_file.p_x, qubit_file.p_y)


@pytest.fixture(scope="session")
def tol():
    return ToleranceConfig()


def uniform_cs(ch):
    return build_control_state(ch, FiniteDist.uniform(ch.x_alphabet), FiniteDist.uniform(ch.y_alphabet))


# (criterion number, line) pairs, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
