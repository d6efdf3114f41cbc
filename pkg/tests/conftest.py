import numpy as np
import pytest

from mixrec.model import joint_tensor, sim1_spec, sim2_spec

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def sim1():
    return sim1_spec()


@pytest.fixture(scope="session")
def sim2():
    return sim2_spec()


@pytest.fixture(scope="session")
def sim1_joint(sim1):
    return joint_tensor(sim1)


@pytest.fixture(scope="session")
def sim2_joint(sim2):
    return joint_tensor(sim2)


@pytest.fixture
def rng():
    return np.random.default_rng(20240521)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
