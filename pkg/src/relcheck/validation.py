"""Agreement between the graph-based and energy-based inconsistency scores."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .ebmfix import DEFAULT_ETA, DEFAULT_MAX_ITERS, DEFAULT_TOL, run_ebm_graph
from .ordergraph import node_ordering
from .relmodel import Axis, AxisGraph, RelationAssertion, Source, make_assertion
from .score import DegenerateInputError, Reference, pearson, score_no_context


@dataclass(frozen=True)
class CorrelationReport:
    labels: tuple[str, ...]
    graph_scores: tuple[float, ...]
    ebm_scores: tuple[float, ...]
    r: float

    def to_dict(self) -> dict:
        return {
            "r": self.r,
            "instances": [
                {"label": lab, "graph_score": g, "ebm_score": e}
                for lab, g, e in zip(self.labels, self.graph_scores, self.ebm_scores)
            ],
        }


def noisy_temporal_assertions(
    order: Sequence[str], ratio: float, rng: np.random.Generator, *, dataset: str = "synthetic",
) -> list[RelationAssertion]:
    """Both questions (a, b) and (b, a) for every pair, each answer wrong with probability ``ratio``."""
    pos = {v: k for k, v in enumerate(order)}
    out = []
    for a in order:
        for b in order:
            if a == b:
                continue
            truth = "before" if pos[a] < pos[b] else "after"
            label = truth if rng.random() >= ratio else ("after" if truth == "before" else "before")
            out.append(make_assertion(a, label, b, source=Source.SYNTHETIC, dataset=dataset))
    return out


def graph_and_ebm_scores(
    graph: AxisGraph, *, seed: int = 0, eta: float = DEFAULT_ETA,
    max_iters: int = DEFAULT_MAX_ITERS, tol: float = DEFAULT_TOL,
) -> tuple[float, float]:
    g = score_no_context(graph, node_ordering(graph), reference=Reference.GRAPH_ORDER)
    _, ebm_order = run_ebm_graph(graph, seed=seed, eta=eta, max_iters=max_iters, tol=tol)
    e = score_no_context(graph, ebm_order, reference=Reference.EBM_ORDER)
    return g.score, e.score


def validate_correlation(
    graphs: Sequence[AxisGraph], labels: Sequence[str] | None = None, *, seed: int = 0, **ebm_kwargs,
) -> CorrelationReport:
    if len(graphs) < 2:
        raise DegenerateInputError("need at least two instances")
    labels = tuple(labels) if labels is not None else tuple(str(k) for k in range(len(graphs)))
    pairs = [graph_and_ebm_scores(g, seed=seed + k, **ebm_kwargs) for k, g in enumerate(graphs)]
    gs = tuple(p[0] for p in pairs)
    es = tuple(p[1] for p in pairs)
    return CorrelationReport(labels, gs, es, pearson(gs, es))


def synthetic_noise_graphs(
    n: int, ratios: Sequence[float], seed: int = 0,
) -> list[AxisGraph]:
    """Time graphs from noisy answers over an n-object order, one per noise ratio."""
    from .relmodel import build_axis_graph

    order = [f"Object_{k}" for k in range(n)]
    rngs = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(len(ratios))]
    return [build_axis_graph(noisy_temporal_assertions(order, r, g), Axis.TIME, objects=order)
            for r, g in zip(ratios, rngs)]
