"""Strongly connected components, node ordering with reverse-edge detection, and repair.

The ordering walks SCCs in topological order; inside each SCC it grows a visited
set from a root, always adding a node reachable from the visited set. Edges from
a newly added node back into the visited set are the reverse edges. Roots and
next nodes are chosen by a reference order: ascending in-degree (multiplicity
counted), ties by node id.
"""

from __future__ import annotations

import heapq
import itertools
from collections.abc import Mapping
from dataclasses import dataclass
from enum import Enum
from types import MappingProxyType

import numpy as np

from .relmodel import AxisGraph, Edge, NodeOrdering, reverse_edges_under


class RepairMode(str, Enum):
    REMOVE = "remove"
    REVERSE = "reverse"


class TooLargeError(ValueError):
    pass


EXACT_MAX_NODES = 8


@dataclass(frozen=True)
class SccDecomposition:
    """Components in a topological order of the condensation."""

    components: tuple[tuple[str, ...], ...]
    component_of: Mapping[str, int]
    condensation: Mapping[int, frozenset[int]]

    def to_dot(self, name: str = "condensation") -> str:
        lines = [f"digraph {name} {{"]
        for i, comp in enumerate(self.components):
            label = "\\n".join(comp).replace('"', '\\"')
            lines.append(f'  c{i} [label="{label}"];')
        for i in sorted(self.condensation):
            for j in sorted(self.condensation[i]):
                lines.append(f"  c{i} -> c{j};")
        lines.append("}")
        return "\n".join(lines) + "\n"


def tarjan_scc(graph: AxisGraph) -> SccDecomposition:
    """Iterative Tarjan; no recursion, deterministic given node ids."""
    index: dict[str, int] = {}
    low: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    found: list[tuple[str, ...]] = []
    counter = 0

    for root in graph.nodes:
        if root in index:
            continue
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        work = [(root, iter(graph.successors(root)))]
        while work:
            v, it = work[-1]
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(graph.successors(w))))
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            else:
                work.pop()
                if work:
                    u = work[-1][0]
                    low[u] = min(low[u], low[v])
                if low[v] == index[v]:
                    comp = []
                    while True:
                        w = stack.pop()
                        on_stack.discard(w)
                        comp.append(w)
                        if w == v:
                            break
                    found.append(tuple(sorted(comp)))

    # Tarjan emits sinks first
    components = tuple(reversed(found))
    component_of = {n: i for i, comp in enumerate(components) for n in comp}
    cond: dict[int, set[int]] = {i: set() for i in range(len(components))}
    for u, v in graph.edges:
        cu, cv = component_of[u], component_of[v]
        if cu != cv:
            cond[cu].add(cv)
    return SccDecomposition(
        components,
        MappingProxyType(component_of),
        MappingProxyType({i: frozenset(s) for i, s in cond.items()}),
    )


def reference_order(graph: AxisGraph) -> list[str]:
    """Nodes by ascending weighted in-degree, ties by id."""
    return sorted(graph.nodes, key=lambda n: (graph.in_degree(n), n))


def _component_order(scc: SccDecomposition, pos: Mapping[str, int]) -> list[int]:
    # Kahn over the condensation, preferring the component whose best member
    # comes earliest in the reference order.
    key = {i: min(pos[n] for n in comp) for i, comp in enumerate(scc.components)}
    indeg = {i: 0 for i in key}
    for i, outs in scc.condensation.items():
        for j in outs:
            indeg[j] += 1
    heap = [(key[i], i) for i, d in indeg.items() if d == 0]
    heapq.heapify(heap)
    out = []
    while heap:
        _, i = heapq.heappop(heap)
        out.append(i)
        for j in scc.condensation[i]:
            indeg[j] -= 1
            if indeg[j] == 0:
                heapq.heappush(heap, (key[j], j))
    return out


def node_ordering(graph: AxisGraph) -> NodeOrdering:
    ref = reference_order(graph)
    pos = {n: i for i, n in enumerate(ref)}
    scc = tarjan_scc(graph)
    rank: dict[str, int] = {}
    t = 1
    for ci in _component_order(scc, pos):
        members = set(scc.components[ci])
        root = min(members, key=pos.__getitem__)
        rank[root] = t
        t += 1
        heap = [(pos[w], w) for w in graph.successors(root) if w in members and w not in rank]
        heapq.heapify(heap)
        while heap:
            _, v = heapq.heappop(heap)
            if v in rank:
                continue
            rank[v] = t
            t += 1
            for w in graph.successors(v):
                if w in members and w not in rank:
                    heapq.heappush(heap, (pos[w], w))
        if any(m not in rank for m in members):
            raise AssertionError("SCC member unreachable from root")
    return NodeOrdering(rank, reverse_edges_under(graph, rank))


def fix_to_simply_ordered(
    graph: AxisGraph, mode: RepairMode | str = RepairMode.REVERSE
) -> tuple[AxisGraph, NodeOrdering]:
    """Drop (REMOVE) or flip (REVERSE) the reverse edges of :func:`node_ordering`."""
    mode = RepairMode(mode)
    ordering = node_ordering(graph)
    reverse = dict(ordering.reverse_edges)
    edges: dict[Edge, int] = {}
    for (u, v), m in graph.edges.items():
        if (u, v) not in reverse:
            edges[(u, v)] = edges.get((u, v), 0) + m
        elif mode is RepairMode.REVERSE:
            edges[(v, u)] = edges.get((v, u), 0) + m
    repaired = graph.replace_edges(edges)
    return repaired, NodeOrdering(ordering.rank, reverse_edges_under(repaired, ordering.rank))


def is_acyclic(graph: AxisGraph) -> bool:
    return all(len(c) == 1 for c in tarjan_scc(graph).components)


def is_weakly_connected(graph: AxisGraph) -> bool:
    if not graph.nodes:
        return True
    adj: dict[str, set[str]] = {n: set() for n in graph.nodes}
    for u, v in graph.edges:
        adj[u].add(v)
        adj[v].add(u)
    seen = {graph.nodes[0]}
    stack = [graph.nodes[0]]
    while stack:
        for w in adj[stack.pop()]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) == len(graph.nodes)


def min_feedback_edges_exact(graph: AxisGraph) -> int:
    """Minimum order-violating edge slots over all node permutations (N <= 8)."""
    n = len(graph.nodes)
    if n > EXACT_MAX_NODES:
        raise TooLargeError(f"exact search limited to {EXACT_MAX_NODES} nodes, got {n}")
    if n < 2 or not graph.edges:
        return 0
    idx = {v: i for i, v in enumerate(graph.nodes)}
    w = np.zeros((n, n), dtype=np.int64)
    for (u, v), m in graph.edges.items():
        w[idx[u], idx[v]] += m
    perms = np.array(list(itertools.permutations(range(n))), dtype=np.intp)
    # sub[p, i, j] = weight of edge perm[i] -> perm[j]; violations are i > j
    sub = w[perms[:, :, None], perms[:, None, :]]
    lower = np.tril(np.ones((n, n), dtype=bool), k=-1)
    return int(sub[:, lower].sum(axis=1).min())
