import numpy as np
import pytest
from hypothesis import strategies as st

from diracflow import (
    Graph,
    build_clique_complex,
    dirac,
    exterior_derivative,
    generate_erdos_renyi,
    parity,
)


def setup(g: Graph):
    """(complex, d, D, P) for a graph."""
    c = build_clique_complex(g)
    d = exterior_derivative(c)
    return c, d, dirac(d), parity(c)


@pytest.fixture
def k2():
    return setup(Graph.complete(2))


@pytest.fixture
def k3():
    return setup(Graph.complete(3))


@st.composite
def graphs(draw, max_n: int = 7):
    n = draw(st.integers(1, max_n))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    mask = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    return Graph(n, frozenset(p for p, keep in zip(pairs, mask) if keep))


def er(n: int, seed: int, p: float = 0.4):
    return setup(generate_erdos_renyi(n, p, seed))


def max_abs(a) -> float:
    a = np.asarray(a)
    return float(np.abs(a).max()) if a.size else 0.0


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("[")[1].split("]")[0])):
            terminalreporter.write_line(line)
