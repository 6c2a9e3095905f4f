from __future__ import annotations

import random

import pytest

from relcheck.relmodel import Axis, AxisGraph


def random_multigraph(rng: random.Random, n: int, density: float, max_mult: int = 3) -> AxisGraph:
    """Each ordered pair gets an edge with probability ``density``; multiplicity 1..max_mult."""
    nodes = [f"n{k}" for k in range(n)]
    edges = {}
    for u in nodes:
        for v in nodes:
            if u != v and rng.random() < density:
                edges[(u, v)] = rng.randint(1, max_mult)
    return AxisGraph(nodes, edges, Axis.TIME)


@pytest.fixture
def rng() -> random.Random:
    return random.Random(1234)


def pytest_terminal_summary(terminalreporter) -> None:
    mod = __import__("sys").modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(results):
        terminalreporter.write_line(results[k])
