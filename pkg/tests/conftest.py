import itertools

import pytest

from ddorder.graph import Graph


def path3():
    return Graph.from_edges(3, [(0, 1), (1, 2)])


def cycle(n):
    return Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def complete(n, weight=1):
    return Graph.from_edges(n, [(u, v, weight) for u, v in itertools.combinations(range(n), 2)])


def figure1():
    # vertices x1..x5 are 0..4
    return Graph.from_edges(5, [(0, 1), (0, 3), (1, 2), (1, 4), (3, 4), (2, 4)])


def enum_mis(g):
    best = 0
    for mask in range(1 << g.n):
        if all(not (mask >> u & 1 and mask >> v & 1) for u, v in g.edges):
            best = max(best, bin(mask).count("1"))
    return best


def enum_cut(g):
    best = 0
    for mask in range(1 << g.n):
        best = max(best, sum(w for (u, v), w in g.edges.items() if (mask >> u & 1) != (mask >> v & 1)))
    return best


def is_independent(g, chosen):
    return all(not (u in chosen and v in chosen) for u, v in g.edges)


def cut_value(g, side):
    return sum(w for (u, v), w in g.edges.items() if (u in side) != (v in side))


@pytest.fixture
def p3():
    return path3()


@pytest.fixture
def fig1():
    return figure1()


# one line per acceptance criterion, printed after the test session
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
