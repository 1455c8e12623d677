import sys

import numpy as np
import pytest

from risdetect.scenario import Scenario


@pytest.fixture(scope="session")
def fast():
    return Scenario.fast()


@pytest.fixture(scope="session")
def table1():
    return Scenario.table1()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_design(U, rng):
    return np.exp(1j * rng.uniform(0, 2 * np.pi, U))


def random_psd(U, rng, rank=None):
    rank = rank or U
    A = rng.standard_normal((U, rank)) + 1j * rng.standard_normal((U, rank))
    return A @ A.conj().T


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.LINES:
        terminalreporter.write_line(line)
