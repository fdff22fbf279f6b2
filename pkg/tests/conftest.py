import re

import numpy as np
import pytest

from irsnet.geometry import build_link_gains, synthetic_gains
from irsnet.layouts import make_scenario

# lines recorded by the acceptance suite, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda l: int(re.search(r"criterion (\d+)", l).group(1))):
            terminalreporter.write_line(line)


def random_synthetic(rng, K, J, spread=2.0):
    """Positive gains log-uniform over ``10**[-spread, 0]``."""
    a = 10.0 ** rng.uniform(-spread, 0.0, (K, K))
    b = 10.0 ** rng.uniform(-spread, 0.0, (K, J))
    e = 10.0 ** rng.uniform(-spread, 0.0, (J, K))
    return synthetic_gains(a, b, e)


def two_user_gains(own):
    # user 1 direct 4, interferer 2, reflected own / interfering powers own and 3
    return synthetic_gains([[4.0, 2.0], [2.0, 4.0]], [[own], [3.0]], [[1.0, 1.0]])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def clustered8():
    sc = make_scenario("paper-fig3", 4, 8, seed=0, M=100)
    return sc, build_link_gains(sc)
