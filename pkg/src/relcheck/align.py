"""Iterative alignment of a relation graph toward a known true order.

Each round orders the current graph, re-orients reverse edges that contradict
the truth, closes the certain edges under transitivity, then adds one fact edge
at the most displaced node. Certain edges (corrected, fact, derived) are never
changed again; only they feed the transitive closure, so closure never sees a
cycle.
"""

from __future__ import annotations

import csv
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any

import numpy as np

from .ordergraph import is_acyclic, node_ordering
from .relmodel import AxisGraph, Edge, NodeOrdering


class Origin(str, Enum):
    MODEL = "model"
    CORRECTED = "corrected"
    TRANSITIVE = "transitive"
    GROUND_TRUTH = "ground_truth"


class CycleError(ValueError):
    pass


_CODE = {Origin.MODEL: 1, Origin.CORRECTED: 2, Origin.TRANSITIVE: 3, Origin.GROUND_TRUTH: 4}
_ORIGIN = {v: k for k, v in _CODE.items()}


@dataclass(frozen=True)
class AlignmentTrace:
    iterations: int
    initial_reverse_edges: int
    corrected: int
    fact_edges: int
    transitive_edges_added: int
    model_edges_kept: int
    final_graph: AxisGraph
    origins: Mapping[Edge, Origin]
    converged: bool

    @property
    def gt_edges_added(self) -> int:
        """Edges fixed by consulting the truth: corrected reverse edges plus fact edges."""
        return self.corrected + self.fact_edges

    def to_dict(self) -> dict[str, Any]:
        return {
            "iterations": self.iterations,
            "converged": self.converged,
            "initial_reverse_edges": self.initial_reverse_edges,
            "gt_edges_added": self.gt_edges_added,
            "corrected": self.corrected,
            "fact_edges": self.fact_edges,
            "transitive_edges_added": self.transitive_edges_added,
            "model_edges_kept": self.model_edges_kept,
            "final_graph": self.final_graph.to_dict(),
            "origins": [[u, v, o.value] for (u, v), o in sorted(self.origins.items())],
        }


def transitive_closure_matrix(adj: np.ndarray) -> np.ndarray:
    """Boolean reachability (paths of length >= 1), Warshall style."""
    r = adj.astype(bool).copy()
    for k in range(r.shape[0]):
        r |= r[:, k:k + 1] & r[k:k + 1, :]
    return r


def apply_transitivity(graph: AxisGraph) -> tuple[AxisGraph, frozenset[Edge]]:
    """Close an acyclic graph; returns the closed graph and the added edges."""
    if not is_acyclic(graph):
        raise CycleError("transitivity needs an acyclic graph; correct reverse edges first")
    nodes = graph.nodes
    idx = {v: k for k, v in enumerate(nodes)}
    adj = np.zeros((len(nodes), len(nodes)), dtype=bool)
    for u, v in graph.edges:
        adj[idx[u], idx[v]] = True
    closed = transitive_closure_matrix(adj)
    added = {(nodes[a], nodes[b]) for a, b in zip(*np.nonzero(closed & ~adj))}
    edges = dict(graph.edges)
    edges.update({e: 1 for e in added})
    return graph.replace_edges(edges), frozenset(added)


def correct_reverse_edges(
    graph: AxisGraph, reverse_edges: Sequence[Edge] | Sequence[tuple[Edge, int]], tau: Sequence[str],
) -> AxisGraph:
    """Re-orient each listed edge to agree with ``tau``; edges already agreeing stay."""
    pos = _positions(tau, graph.nodes)
    edges = dict(graph.edges)
    for item in reverse_edges:
        (u, v) = item[0] if isinstance(item[0], tuple) else item  # type: ignore[misc]
        if (u, v) not in edges or pos[u] < pos[v]:
            continue
        m = edges.pop((u, v))
        edges[(v, u)] = edges.get((v, u), 0) + m
    return graph.replace_edges(edges)


def _positions(tau: Sequence[str], nodes: Sequence[str]) -> dict[str, int]:
    pos = {v: k for k, v in enumerate(tau)}
    if len(pos) != len(tau) or set(pos) != set(nodes):
        raise ValueError("tau must be a total order over exactly the graph's nodes")
    return pos


class _State:
    """Simple oriented graph in tau coordinates: d[a, b] means edge tau[a] -> tau[b]."""

    def __init__(self, graph: AxisGraph, tau: Sequence[str]):
        self.tau = list(tau)
        n = len(tau)
        pos = _positions(tau, graph.nodes)
        w = np.zeros((n, n), dtype=np.int64)
        for (u, v), m in graph.edges.items():
            w[pos[u], pos[v]] += m
        # collapse opposite edges by majority; ties follow the ordering of the input
        rank = node_ordering(graph).rank
        r = np.array([rank[v] for v in tau])
        d = w > w.T
        tie = (w == w.T) & (w > 0)
        d |= tie & (r[:, None] < r[None, :])
        self.d = d
        self.origin = np.where(d, _CODE[Origin.MODEL], 0).astype(np.int8)
        self.certain = np.zeros((n, n), dtype=bool)

    def graph(self, axis) -> AxisGraph:
        a, b = np.nonzero(self.d)
        return AxisGraph(self.tau, {(self.tau[i], self.tau[j]): 1 for i, j in zip(a, b)}, axis)

    def contradictions(self) -> int:
        return int(np.tril(self.d, k=-1).sum())

    def set_true(self, a: int, b: int, origin: Origin) -> None:
        # a < b in tau coordinates
        if self.d[b, a]:
            self.d[b, a] = False
            self.origin[b, a] = 0
            self.d[a, b] = True
            self.origin[a, b] = _CODE[origin]
        elif not self.d[a, b]:
            self.d[a, b] = True
            self.origin[a, b] = _CODE[origin]
        self.certain[a, b] = True

    def close(self) -> None:
        closed = transitive_closure_matrix(self.certain)
        for a, b in zip(*np.nonzero(closed & ~self.certain)):
            self.set_true(int(a), int(b), Origin.TRANSITIVE)


def align(graph: AxisGraph, tau: Sequence[str], *, max_iters: int | None = None) -> AlignmentTrace:
    """Edit ``graph`` until it agrees with ``tau``; iteration cap defaults to N."""
    st = _State(graph, tau)
    n = len(st.tau)
    cap = n if max_iters is None else max_iters
    initial_reverse = None
    iterations = 0
    while True:
        g = st.graph(graph.axis)
        pi = node_ordering(g)
        if initial_reverse is None:
            initial_reverse = len(pi.reverse_edges)
        if not pi.reverse_edges and st.contradictions() == 0:
            break
        if iterations >= cap:
            break
        iterations += 1
        pos = {v: k for k, v in enumerate(st.tau)}
        for (u, v), _ in pi.reverse_edges:
            a, b = pos[u], pos[v]
            if a > b:
                st.set_true(b, a, Origin.CORRECTED)
            else:
                st.certain[a, b] = True  # checked against the truth, already right
        st.close()
        fact = _fact_edge(st, pi)
        if fact is not None:
            st.set_true(*fact, Origin.GROUND_TRUTH)
            st.close()

    final = st.graph(graph.axis)
    origins = {(st.tau[a], st.tau[b]): _ORIGIN[int(st.origin[a, b])] for a, b in zip(*np.nonzero(st.d))}
    counts = {o: 0 for o in Origin}
    for o in origins.values():
        counts[o] += 1
    return AlignmentTrace(
        iterations=iterations,
        initial_reverse_edges=int(initial_reverse or 0),
        corrected=counts[Origin.CORRECTED],
        fact_edges=counts[Origin.GROUND_TRUTH],
        transitive_edges_added=counts[Origin.TRANSITIVE],
        model_edges_kept=counts[Origin.MODEL],
        final_graph=final,
        origins=origins,
        converged=st.contradictions() == 0 and not node_ordering(final).reverse_edges,
    )


def _fact_edge(st: _State, pi: NodeOrdering) -> tuple[int, int] | None:
    """A contradicted pair next to the most displaced node, as (earlier, later) tau indices."""
    wrong = np.tril(st.d, k=-1)
    if not wrong.any():
        return None
    wrong_pair = wrong | wrong.T
    n = len(st.tau)
    disp = [(pi.rank[v] - 1 - k, v, k) for k, v in enumerate(st.tau)]
    disp.sort(key=lambda t: (-abs(t[0]), t[1]))
    for d, _, k in disp:
        later = range(k + 1, n)
        earlier = range(k - 1, -1, -1)
        sides = (later, earlier) if d > 0 else (earlier, later)
        for side in sides:
            for j in side:
                if wrong_pair[k, j]:
                    return (min(k, j), max(k, j))
    return None


TABLE_FIELDS = ("axis", "gt", "trans", "model", "iterations", "initial_reverse_edges")


def write_alignment_csv(path: str | Path, traces: Mapping[str, AlignmentTrace]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TABLE_FIELDS)
        for axis, t in traces.items():
            w.writerow([axis, t.gt_edges_added, t.transitive_edges_added, t.model_edges_kept,
                        t.iterations, t.initial_reverse_edges])
