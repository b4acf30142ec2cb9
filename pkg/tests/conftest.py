import math

import numpy as np
import pytest

from cgpo_kit.presets import paper_hamiltonian, paper_rho
from cgpo_kit.qcore import HarmonicHamiltonian, plus_state


@pytest.fixture
def H():
    return paper_hamiltonian()


@pytest.fixture
def qutrit():
    return HarmonicHamiltonian((0, 1, 2), 1.0, 0.7)


@pytest.fixture
def rho_paper():
    return paper_rho()


@pytest.fixture
def plus():
    return plus_state()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


LN3 = math.log(3)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
