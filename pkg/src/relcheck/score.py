"""Inconsistency scores: reverse-edge ratio without context, error rate with full context."""

from __future__ import annotations

import csv
import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any

from .relmodel import (
    AXIS_DOMAIN,
    Axis,
    AxisGraph,
    Context,
    ContextError,
    ContextMode,
    Domain,
    DomainMismatchError,
    NodeOrdering,
    RelationAssertion,
    axis_edge,
    reverse_edges_under,
)


class ScoreMode(str, Enum):
    EDIT_TO_CONSISTENCY = "edit_to_consistency"
    ERROR_RATE = "error_rate"


class Reference(str, Enum):
    GRAPH_ORDER = "graph_order"
    EBM_ORDER = "ebm_order"
    GROUND_TRUTH = "ground_truth"


class DegenerateInputError(ValueError):
    pass


REPORT_FIELDS = (
    "dataset", "axis", "n_objects", "denominator", "violating_edges", "percent", "mode", "reference",
)


@dataclass(frozen=True)
class InconsistencyReport:
    dataset: str
    axis: Axis | None
    n_objects: int
    denominator: int
    violating_edges: int
    mode: ScoreMode
    reference: Reference

    def __post_init__(self) -> None:
        if self.denominator <= 0:
            raise ValueError("denominator must be positive")
        if self.mode is ScoreMode.EDIT_TO_CONSISTENCY and \
                self.denominator != self.n_objects * (self.n_objects - 1) // 2:
            raise ValueError("edit-to-consistency denominator must be N(N-1)/2")

    @property
    def score(self) -> float:
        return self.violating_edges / self.denominator

    @property
    def percent(self) -> float:
        """Score in percent, two decimals as in published tables."""
        return round(100 * self.violating_edges / self.denominator, 2)

    def to_dict(self) -> dict[str, Any]:
        return {
            "dataset": self.dataset,
            "axis": self.axis.value if self.axis is not None else "",
            "n_objects": self.n_objects,
            "denominator": self.denominator,
            "violating_edges": self.violating_edges,
            "percent": self.percent,
            "mode": self.mode.value,
            "reference": self.reference.value,
        }


@dataclass(frozen=True)
class KinshipReport(InconsistencyReport):
    gender_conflicts: Mapping[str, Mapping[str, list[str]]] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        out = super().to_dict()
        out["gender_conflicts"] = {k: dict(v) for k, v in self.gender_conflicts.items()}
        return out


def score_no_context(
    graph: AxisGraph,
    reference_order: NodeOrdering,
    *,
    dataset: str = "",
    reference: Reference = Reference.GRAPH_ORDER,
) -> InconsistencyReport:
    """Reverse-edge slots (with multiplicity) over N(N-1)/2; can exceed 100% on multigraphs."""
    missing = set(graph.nodes) - set(reference_order.rank)
    if missing:
        raise ValueError(f"ordering does not cover nodes {sorted(missing)}")
    n = len(graph.nodes)
    if n < 2:
        raise DegenerateInputError("need at least two objects")
    violating = sum(m for _, m in reverse_edges_under(graph, reference_order.rank))
    return InconsistencyReport(
        dataset=dataset, axis=graph.axis, n_objects=n, denominator=n * (n - 1) // 2,
        violating_edges=violating, mode=ScoreMode.EDIT_TO_CONSISTENCY, reference=reference,
    )


def score_with_ground_truth(
    assertions: Iterable[RelationAssertion],
    context: Context,
    *,
    axis: Axis | str | None = None,
    dataset: str = "",
    denominator: int | None = None,
) -> InconsistencyReport:
    """Count assertions contradicting what a full context entails.

    Order domains compare per axis (a spatial answer is judged on X and Y
    separately); kinship compares labels. The denominator defaults to N(N-1).
    """
    if context.mode is not ContextMode.FULL:
        raise ContextError(f"context must be full, got {context.mode.value}")
    n = len(context.objects)
    denom = n * (n - 1) if denominator is None else int(denominator)
    wrong = 0
    if context.domain is Domain.KINSHIP:
        truth = context.closure()
        for a in assertions:
            t = truth.get((a.subject, a.object))
            if t is not None and t != a.label.label:
                wrong += 1
        ax = None
    else:
        if axis is None:
            if context.domain is Domain.SPATIAL:
                raise ValueError("spatial scoring needs axis x or y")
            axis = Axis.TIME
        ax = Axis(axis)
        if AXIS_DOMAIN[ax] is not context.domain:
            raise DomainMismatchError(f"axis {ax.value} does not fit {context.domain.value}")
        closed = context.axis_closure(ax)
        for a in assertions:
            e = axis_edge(a, ax)
            if e is not None and e not in closed:
                wrong += 1
    return InconsistencyReport(
        dataset=dataset, axis=ax, n_objects=n, denominator=denom, violating_edges=wrong,
        mode=ScoreMode.ERROR_RATE, reference=Reference.GROUND_TRUTH,
    )


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Sample Pearson correlation."""
    if len(xs) != len(ys):
        raise DegenerateInputError("length mismatch")
    n = len(xs)
    if n < 2:
        raise DegenerateInputError("need at least two points")
    mx = math.fsum(xs) / n
    my = math.fsum(ys) / n
    dx = [x - mx for x in xs]
    dy = [y - my for y in ys]
    sxx = math.fsum(d * d for d in dx)
    syy = math.fsum(d * d for d in dy)
    if sxx == 0 or syy == 0:
        raise DegenerateInputError("zero variance")
    r = math.fsum(a * b for a, b in zip(dx, dy)) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def write_reports_csv(path: str | Path, reports: Iterable[InconsistencyReport]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=REPORT_FIELDS, extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        for r in reports:
            w.writerow(r.to_dict())
