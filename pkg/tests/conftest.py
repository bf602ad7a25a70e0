import numpy as np
import pytest
from hypothesis import settings

from sparsemf.graph import load_edge_list
from sparsemf.synthetic import path_graph

settings.register_profile("ci", max_examples=30, deadline=None)
settings.load_profile("ci")


@pytest.fixture
def tri():
    return load_edge_list(["0 1", "1 2", "2 0"])[0]


@pytest.fixture
def wtri():
    # A_01 = 2, A_12 = 1, A_20 = 1
    return load_edge_list(["0 1 2", "1 2 1", "2 0 1"], weighted=True)[0]


@pytest.fixture
def path3():
    return path_graph(3)


@pytest.fixture
def path4():
    return path_graph(4)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def acceptance(request):
    """Record one ``criterion N: PASS|FAIL ...`` line for the terminal summary."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def record(number: int, passed: bool, detail: str) -> None:
        lines.append(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
