"""Energy-based fixer: one scalar per object, hinge energies, full-batch gradient descent."""

from __future__ import annotations

import random
from collections.abc import Iterable, Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from .relmodel import AxisGraph, Edge, NodeOrdering, reverse_edges_under

DEFAULT_ETA = 0.01
DEFAULT_MAX_ITERS = 5000
DEFAULT_TOL = 1e-9
PATIENCE = 10

Relation = tuple[str, str, int]  # (i, j, multiplicity): x_i should precede x_j


def relation_energy(x_i: float, x_j: float) -> float:
    return max(0.0, 1.0 + x_i - x_j)


def relations_from_graph(graph: AxisGraph) -> list[Relation]:
    return [(u, v, m) for u, v, m in graph.edge_slots()]


def _normalize(relations: Iterable[Relation | Edge]) -> tuple[Relation, ...]:
    out = []
    for r in relations:
        i, j, m = (r[0], r[1], 1) if len(r) == 2 else r
        if i == j:
            raise ValueError(f"self-relation on {i!r}")
        if m < 1:
            raise ValueError("multiplicity must be >= 1")
        out.append((i, j, int(m)))
    return tuple(out)


def _introduction_order(relations: Sequence[Relation], extra: Iterable[str] = ()) -> tuple[str, ...]:
    seen: dict[str, None] = {}
    for i, j, _ in relations:
        seen.setdefault(i)
        seen.setdefault(j)
    for n in extra:
        seen.setdefault(n)
    return tuple(seen)


@dataclass(frozen=True)
class EbmState:
    nodes: tuple[str, ...]
    x: np.ndarray
    relations: tuple[Relation, ...]
    eta: float = DEFAULT_ETA
    energy_trace: tuple[tuple[int, float], ...] = ()
    _index: Mapping[str, int] = field(default=None, repr=False, compare=False)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self._index is None:
            object.__setattr__(self, "_index", {n: k for k, n in enumerate(self.nodes)})
        missing = {n for i, j, _ in self.relations for n in (i, j)} - set(self._index)
        if missing:
            raise ValueError(f"coords missing for {sorted(missing)}")
        if len(self.x) != len(self.nodes):
            raise ValueError("coordinate vector length mismatch")

    @cached_property
    def _arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        idx = self._index
        i = np.fromiter((idx[r[0]] for r in self.relations), dtype=np.intp, count=len(self.relations))
        j = np.fromiter((idx[r[1]] for r in self.relations), dtype=np.intp, count=len(self.relations))
        w = np.fromiter((r[2] for r in self.relations), dtype=np.float64, count=len(self.relations))
        return i, j, w

    @property
    def coords(self) -> dict[str, float]:
        return {n: float(v) for n, v in zip(self.nodes, self.x)}

    def with_coords(self, coords: Mapping[str, float]) -> EbmState:
        x = np.array([coords[n] for n in self.nodes], dtype=np.float64)
        return replace(self, x=x)


def total_energy(state: EbmState) -> float:
    i, j, w = state._arrays
    if len(w) == 0:
        return 0.0
    return float(np.dot(w, np.maximum(0.0, 1.0 + state.x[i] - state.x[j])))


def gradient(state: EbmState) -> np.ndarray:
    """Subgradient of the total energy; zero at the hinge kink."""
    i, j, w = state._arrays
    n = len(state.nodes)
    if len(w) == 0:
        return np.zeros(n)
    act = w * ((1.0 + state.x[i] - state.x[j]) > 0.0)
    return np.bincount(i, act, minlength=n) - np.bincount(j, act, minlength=n)


def gradient_step(state: EbmState) -> EbmState:
    if state.eta <= 0:
        raise ValueError("eta must be positive")
    x = state.x - state.eta * gradient(state)
    new = replace(state, x=x)
    step = len(state.energy_trace)
    return replace(new, energy_trace=state.energy_trace + ((step, total_energy(new)),))


def initialize(
    relations: Iterable[Relation | Edge],
    seed: int | None = 0,
    *,
    nodes: Iterable[str] = (),
    eta: float = DEFAULT_ETA,
) -> EbmState:
    """Sequential placement with one corrective pass per relation touching the new object."""
    rels = _normalize(relations)
    order = _introduction_order(rels, nodes)
    touching: dict[str, list[tuple[str, bool]]] = {n: [] for n in order}
    for i, j, _ in rels:
        touching[i].append((j, True))   # i precedes j
        touching[j].append((i, False))
    rng = random.Random(seed)
    pos: dict[str, float] = {}
    for k in order:
        xk = rng.random()
        for j, k_first in touching[k]:
            if j not in pos:
                continue
            xj = pos[j]
            if (k_first and xk > xj) or (not k_first and xk < xj):
                xk = 1.5 * xj - 0.5 * xk
        pos[k] = xk
    x = np.array([pos[n] for n in order], dtype=np.float64)
    state = EbmState(order, x, rels, eta)
    return replace(state, energy_trace=((0, total_energy(state)),))


def ordering_of(state: EbmState) -> NodeOrdering:
    ranked = sorted(state.nodes, key=lambda n: (state.x[state._index[n]], n))
    rank = {n: r for r, n in enumerate(ranked, start=1)}
    edges = {(i, j): 0 for i, j, _ in state.relations}
    for i, j, m in state.relations:
        edges[(i, j)] += m
    graph = AxisGraph(state.nodes, edges)
    return NodeOrdering(rank, reverse_edges_under(graph, rank))


def run_ebm(
    relations: Iterable[Relation | Edge],
    seed: int | None = 0,
    eta: float = DEFAULT_ETA,
    max_iters: int = DEFAULT_MAX_ITERS,
    tol: float = DEFAULT_TOL,
    *,
    nodes: Iterable[str] = (),
    patience: int | None = PATIENCE,
) -> tuple[EbmState, NodeOrdering]:
    """Descend until E = 0, ``patience`` consecutive steps improve by less than ``tol``, or the cap.

    ``patience=None`` disables the stall test. Fixed-step descent chatters near the
    hinge kinks, so on long satisfiable chains the stall test can fire before E = 0.
    """
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    if eta <= 0:
        raise ValueError("eta must be positive")
    state = initialize(relations, seed, nodes=nodes, eta=eta)
    i, j, w = state._arrays
    n = len(state.nodes)
    x = state.x.copy()
    energy = state.energy_trace[0][1]
    trace = [(0, energy)]
    stalled = 0
    # inlined loop; gradient_step allocates a new state per call
    for it in range(1, max_iters + 1):
        if energy == 0.0 or len(w) == 0:
            break
        act = w * ((1.0 + x[i] - x[j]) > 0.0)
        x -= eta * (np.bincount(i, act, minlength=n) - np.bincount(j, act, minlength=n))
        new_energy = float(np.dot(w, np.maximum(0.0, 1.0 + x[i] - x[j])))
        trace.append((it, new_energy))
        stalled = stalled + 1 if energy - new_energy < tol else 0
        energy = new_energy
        if patience and stalled >= patience:
            break
    final = replace(state, x=x, energy_trace=tuple(trace))
    return final, ordering_of(final)


def run_ebm_graph(graph: AxisGraph, **kwargs) -> tuple[EbmState, NodeOrdering]:
    return run_ebm(relations_from_graph(graph), nodes=graph.nodes, **kwargs)


def order_error_rate(order: Sequence[str], truth: Sequence[str]) -> float:
    """Fraction of unordered pairs ranked differently by the two sequences."""
    if sorted(order) != sorted(truth):
        raise ValueError("orders cover different objects")
    n = len(truth)
    if n < 2:
        return 0.0
    t = {v: k for k, v in enumerate(truth)}
    r = np.array([t[v] for v in order])
    disc = int(np.triu(r[:, None] > r[None, :], k=1).sum())
    return disc / (n * (n - 1) // 2)


def noisy_relations(truth: Sequence[str], ratio: float, rng: np.random.Generator) -> list[Relation]:
    """Full pairwise precedence set of `truth` with round(ratio * M) pairs flipped."""
    pairs = [(truth[a], truth[b]) for a in range(len(truth)) for b in range(a + 1, len(truth))]
    k = int(round(ratio * len(pairs)))
    flip = set(rng.choice(len(pairs), size=k, replace=False).tolist()) if k else set()
    return [((v, u, 1) if idx in flip else (u, v, 1)) for idx, (u, v) in enumerate(pairs)]


@dataclass(frozen=True)
class SweepPoint:
    ratio: float
    mean_error: float
    errors: tuple[float, ...]


def noise_sweep(
    ground_truth_order: Sequence[str],
    ratios: Iterable[float],
    trials: int = 20,
    seed: int = 0,
    *,
    eta: float = DEFAULT_ETA,
    max_iters: int = DEFAULT_MAX_ITERS,
    tol: float = DEFAULT_TOL,
    workers: int = 1,
) -> list[SweepPoint]:
    ratios = list(ratios)
    if any(not 0.0 <= r <= 1.0 for r in ratios):
        raise ValueError("ratios must lie in [0, 1]")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    truth = list(ground_truth_order)
    children = np.random.SeedSequence(seed).spawn(len(ratios) * trials)

    def one(k: int) -> float:
        ratio = ratios[k // trials]
        ss = children[k]
        rng = np.random.default_rng(ss)
        rels = noisy_relations(truth, ratio, rng)
        init_seed = int(ss.generate_state(1)[0])
        _, ordering = run_ebm(rels, init_seed, eta, max_iters, tol, nodes=truth)
        return order_error_rate(ordering.order, truth)

    jobs = range(len(ratios) * trials)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            errs = list(pool.map(one, jobs))
    else:
        errs = [one(k) for k in jobs]
    out = []
    for a, ratio in enumerate(ratios):
        chunk = tuple(errs[a * trials:(a + 1) * trials])
        out.append(SweepPoint(ratio, float(np.mean(chunk)), chunk))
    return out
