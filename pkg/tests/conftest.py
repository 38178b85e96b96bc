import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from robspat.lattice import LatticeSpec, build_lattice_weights, from_adjacency_list  # noqa: E402


@pytest.fixture(scope="session")
def rook10():
    return build_lattice_weights(LatticeSpec(10, 10, "rook"))


@pytest.fixture(scope="session")
def queen10():
    return build_lattice_weights(LatticeSpec(10, 10, "queen"))


@pytest.fixture(scope="session")
def torus4():
    return build_lattice_weights(LatticeSpec(4, 4, "rook", torus=True))


@pytest.fixture(scope="session")
def swap():
    return from_adjacency_list([(0, 1, 1), (1, 0, 1)], 2)


@pytest.fixture(scope="session")
def weighted_graph():
    """Small asymmetric graph with unequal raw weights."""
    pairs = [
        (0, 1, 2.0), (0, 2, 1.0), (0, 5, 0.5),
        (1, 0, 1.0), (1, 3, 3.0),
        (2, 0, 1.0), (2, 3, 1.0), (2, 4, 2.0),
        (3, 1, 1.0), (3, 2, 1.0),
        (4, 2, 4.0), (4, 5, 1.0),
        (5, 4, 1.0), (5, 0, 1.0), (5, 3, 2.0),
    ]
    return from_adjacency_list(pairs, 6)


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
