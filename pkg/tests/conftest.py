import numpy as np
import pytest

from stdgocp import DgSpace, SipgParams, TimeGrid, assemble_operators, build_uniform_mesh

EXAMPLE1_PARAMS = SipgParams(1e-5, (1.0, 0.0), 1.0)
EXAMPLE2_PARAMS = SipgParams(1e-5, (0.5, 0.5), 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def setup_ops(n, params=EXAMPLE1_PARAMS):
    space = DgSpace(build_uniform_mesh(n))
    return space, assemble_operators(space, params)


@pytest.fixture(scope="session")
def small_problem():
    space, ops = setup_ops(4)
    return space, ops, TimeGrid(1.0, 8)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
