"""Core domain types: relation vocabularies, assertions, axis graphs, orderings, contexts."""

from __future__ import annotations

import json
import logging
import unicodedata
from collections import Counter, deque
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from pathlib import Path
from types import MappingProxyType
from typing import Any, Union

logger = logging.getLogger(__name__)

Edge = tuple[str, str]


class Domain(str, Enum):
    TEMPORAL = "temporal"
    SPATIAL = "spatial"
    KINSHIP = "kinship"


class Axis(str, Enum):
    TIME = "time"
    X = "x"
    Y = "y"
    KINSHIP_GENERATION = "kinship_generation"


class Source(str, Enum):
    MODEL = "model"
    GROUND_TRUTH = "ground_truth"
    SYNTHETIC = "synthetic"


class ContextMode(str, Enum):
    EMPTY = "empty"
    FULL = "full"
    PARTIAL = "partial"


class DomainMismatchError(ValueError):
    """A label, axis or assertion does not belong to the expected domain."""


class ContextError(ValueError):
    """Context facts are contradictory or insufficient for the requested use."""


TEMPORAL_LABELS = ("before", "after")
SPATIAL_LABELS = ("northeast", "northwest", "southeast", "southwest")
KINSHIP_LABELS = (
    "husband", "wife", "father", "mother", "son", "daughter", "brother", "sister",
    "uncle", "aunt", "cousin", "niece", "nephew", "grandpa", "grandma", "grandson",
    "granddaughter", "brother-in-law", "sister-in-law", "father-in-law", "mother-in-law",
    "son-in-law", "daughter-in-law", "aunt-in-law", "uncle-in-law", "niece-in-law",
    "nephew-in-law", "great-grandpa", "great-grandma", "great-grandson",
    "great-granddaughter",
)

VOCABULARY: Mapping[Domain, tuple[str, ...]] = MappingProxyType({
    Domain.TEMPORAL: TEMPORAL_LABELS,
    Domain.SPATIAL: SPATIAL_LABELS,
    Domain.KINSHIP: KINSHIP_LABELS,
})

AXIS_DOMAIN: Mapping[Axis, Domain] = MappingProxyType({
    Axis.TIME: Domain.TEMPORAL,
    Axis.X: Domain.SPATIAL,
    Axis.Y: Domain.SPATIAL,
    Axis.KINSHIP_GENERATION: Domain.KINSHIP,
})

DOMAIN_AXES: Mapping[Domain, tuple[Axis, ...]] = MappingProxyType({
    Domain.TEMPORAL: (Axis.TIME,),
    Domain.SPATIAL: (Axis.X, Axis.Y),
    Domain.KINSHIP: (Axis.KINSHIP_GENERATION,),
})

# Edge (u -> v) on an axis means "u precedes v": further west on X, further
# south on Y, earlier on TIME, older generation on KINSHIP_GENERATION.
# Each compass label gives the sign of (subject - object) along (X, Y).
# Ordinary compass reading: "A northeast of B" puts A east of and north of B.
COMPASS_SIGNS: Mapping[str, tuple[int, int]] = MappingProxyType({
    "northeast": (1, 1),
    "northwest": (-1, 1),
    "southeast": (1, -1),
    "southwest": (-1, -1),
})

# subject generation minus object generation (top generation is 0)
KINSHIP_GENERATION_OFFSET: Mapping[str, int] = MappingProxyType({
    "husband": 0, "wife": 0, "brother": 0, "sister": 0, "cousin": 0,
    "brother-in-law": 0, "sister-in-law": 0,
    "father": -1, "mother": -1, "uncle": -1, "aunt": -1, "father-in-law": -1,
    "mother-in-law": -1, "uncle-in-law": -1, "aunt-in-law": -1,
    "son": 1, "daughter": 1, "nephew": 1, "niece": 1, "son-in-law": 1,
    "daughter-in-law": 1, "nephew-in-law": 1, "niece-in-law": 1,
    "grandpa": -2, "grandma": -2, "grandson": 2, "granddaughter": 2,
    "great-grandpa": -3, "great-grandma": -3, "great-grandson": 3,
    "great-granddaughter": 3,
})

# gender of the subject implied by a kinship label; None for neutral labels
KINSHIP_SUBJECT_GENDER: Mapping[str, str | None] = MappingProxyType({
    label: (
        None if label == "cousin"
        else "male" if label in {
            "husband", "father", "son", "brother", "uncle", "nephew", "grandpa", "grandson",
            "brother-in-law", "father-in-law", "son-in-law", "uncle-in-law",
            "nephew-in-law", "great-grandpa", "great-grandson",
        }
        else "female"
    )
    for label in KINSHIP_LABELS
})


def normalize_id(name: str) -> str:
    """NFC-normalise and strip an object name; empty names are rejected."""
    if not isinstance(name, str):
        raise TypeError(f"object id must be str, got {type(name).__name__}")
    out = unicodedata.normalize("NFC", name).strip()
    if not out:
        raise ValueError("object id must be non-empty")
    return out


def domain_of_label(label: str) -> Domain:
    key = label.strip().lower()
    for domain, vocab in VOCABULARY.items():
        if key in vocab:
            return domain
    raise DomainMismatchError(f"label {label!r} is not in any relation vocabulary")


@dataclass(frozen=True)
class RelationLabel:
    domain: Domain
    label: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "domain", Domain(self.domain))
        object.__setattr__(self, "label", self.label.strip().lower())
        if self.label not in VOCABULARY[self.domain]:
            raise DomainMismatchError(
                f"label {self.label!r} is not in the {self.domain.value} vocabulary"
            )

    @classmethod
    def parse(cls, label: str, domain: Domain | str | None = None) -> RelationLabel:
        if domain is None:
            domain = domain_of_label(label)
        return cls(Domain(domain), label)

    def __str__(self) -> str:
        return self.label


@dataclass(frozen=True)
class RelationAssertion:
    """A single directed claim ``subject LABEL object``."""

    subject: str
    object: str
    label: RelationLabel
    raw_text: str = ""
    source: Source = Source.MODEL
    dataset: str = ""
    axis_hint: Axis | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "subject", normalize_id(self.subject))
        object.__setattr__(self, "object", normalize_id(self.object))
        object.__setattr__(self, "source", Source(self.source))
        if isinstance(self.label, str):
            object.__setattr__(self, "label", RelationLabel.parse(self.label))
        if self.axis_hint is not None:
            object.__setattr__(self, "axis_hint", Axis(self.axis_hint))
        if self.subject == self.object:
            raise ValueError(f"assertion relates {self.subject!r} to itself")

    @property
    def domain(self) -> Domain:
        return self.label.domain

    def to_record(self) -> dict[str, Any]:
        rec: dict[str, Any] = {
            "subject": self.subject,
            "object": self.object,
            "label": self.label.label,
            "raw_text": self.raw_text,
            "source": self.source.value,
            "dataset": self.dataset,
        }
        if self.axis_hint is not None:
            rec["axis_hint"] = self.axis_hint.value
        return rec

    @classmethod
    def from_record(cls, rec: Mapping[str, Any]) -> RelationAssertion:
        return cls(
            subject=rec["subject"],
            object=rec["object"],
            label=RelationLabel.parse(rec["label"]),
            raw_text=rec.get("raw_text", "") or "",
            source=Source(rec.get("source", Source.MODEL.value)),
            dataset=rec.get("dataset", "") or "",
            axis_hint=rec.get("axis_hint"),
        )


def make_assertion(subject: str, label: str, obj: str, **kwargs: Any) -> RelationAssertion:
    """Shorthand: ``make_assertion("A", "before", "B")``."""
    return RelationAssertion(subject, obj, RelationLabel.parse(label), **kwargs)


def try_make_assertion(subject: str, label: str, obj: str, **kwargs: Any) -> RelationAssertion | None:
    """Like :func:`make_assertion` but drops self-relations with a warning."""
    try:
        return make_assertion(subject, label, obj, **kwargs)
    except ValueError as exc:
        if isinstance(exc, DomainMismatchError):
            raise
        logger.warning("dropping assertion: %s", exc)
        return None


# --- axis edges -----------------------------------------------------------

def decompose_spatial(assertion: RelationAssertion) -> tuple[Edge, Edge]:
    """Return the (X edge, Y edge) implied by a compass assertion."""
    if assertion.domain is not Domain.SPATIAL:
        raise DomainMismatchError(f"{assertion.label} is not a compass label")
    sx, sy = COMPASS_SIGNS[assertion.label.label]
    s, o = assertion.subject, assertion.object
    x_edge = (o, s) if sx > 0 else (s, o)
    y_edge = (o, s) if sy > 0 else (s, o)
    return x_edge, y_edge


def recompose_spatial(subject: str, obj: str, x_edge: Edge, y_edge: Edge) -> str:
    """Inverse of :func:`decompose_spatial` for one ordered pair."""
    if set(x_edge) != {subject, obj} or set(y_edge) != {subject, obj}:
        raise ValueError("axis edges must join subject and object")
    sx = 1 if x_edge == (obj, subject) else -1
    sy = 1 if y_edge == (obj, subject) else -1
    for label, signs in COMPASS_SIGNS.items():
        if signs == (sx, sy):
            return label
    raise AssertionError("unreachable")


def temporal_edge(assertion: RelationAssertion) -> Edge:
    if assertion.domain is not Domain.TEMPORAL:
        raise DomainMismatchError(f"{assertion.label} is not a temporal label")
    if assertion.label.label == "before":
        return (assertion.subject, assertion.object)
    return (assertion.object, assertion.subject)


def kinship_generation_edge(assertion: RelationAssertion) -> Edge | None:
    """Older-generation -> younger-generation edge, or None for same-generation labels."""
    if assertion.domain is not Domain.KINSHIP:
        raise DomainMismatchError(f"{assertion.label} is not a kinship label")
    offset = KINSHIP_GENERATION_OFFSET[assertion.label.label]
    if offset < 0:
        return (assertion.subject, assertion.object)
    if offset > 0:
        return (assertion.object, assertion.subject)
    return None


def axis_edge(assertion: RelationAssertion, axis: Axis) -> Edge | None:
    axis = Axis(axis)
    if AXIS_DOMAIN[axis] is not assertion.domain:
        raise DomainMismatchError(
            f"{assertion.domain.value} assertion cannot feed the {axis.value} axis"
        )
    if axis is Axis.TIME:
        return temporal_edge(assertion)
    if axis is Axis.KINSHIP_GENERATION:
        return kinship_generation_edge(assertion)
    x_edge, y_edge = decompose_spatial(assertion)
    return x_edge if axis is Axis.X else y_edge


# --- graphs ---------------------------------------------------------------

EdgeInput = Union[Mapping[Edge, int], Iterable[Edge]]


class AxisGraph:
    """Immutable directed multigraph over object ids for one order axis.

    ``edges`` maps ``(u, v)`` to a multiplicity >= 1; ``(u, v)`` means u precedes v.
    """

    __slots__ = ("axis", "_nodes", "_edges", "_succ", "_pred")

    def __init__(self, nodes: Iterable[str] = (), edges: EdgeInput = (), axis: Axis = Axis.TIME):
        counts: Counter[Edge] = Counter()
        if isinstance(edges, Mapping):
            for e, m in edges.items():
                if int(m) < 0:
                    raise ValueError(f"negative multiplicity for {e}")
                counts[(e[0], e[1])] += int(m)
        else:
            for u, v in edges:
                counts[(u, v)] += 1
        node_set = set(nodes)
        for (u, v), m in counts.items():
            if u == v:
                raise ValueError(f"self-loop on {u!r}")
            node_set.add(u)
            node_set.add(v)
        self.axis = Axis(axis)
        self._nodes = tuple(sorted(node_set))
        self._edges = MappingProxyType({e: m for e, m in sorted(counts.items()) if m > 0})
        succ: dict[str, list[str]] = {n: [] for n in self._nodes}
        pred: dict[str, list[str]] = {n: [] for n in self._nodes}
        for u, v in self._edges:
            succ[u].append(v)
            pred[v].append(u)
        self._succ = {n: tuple(vs) for n, vs in succ.items()}
        self._pred = {n: tuple(vs) for n, vs in pred.items()}

    @property
    def nodes(self) -> tuple[str, ...]:
        return self._nodes

    @property
    def edges(self) -> Mapping[Edge, int]:
        return self._edges

    def __len__(self) -> int:
        return len(self._nodes)

    def __contains__(self, edge: object) -> bool:
        return edge in self._edges

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, AxisGraph):
            return NotImplemented
        return (self.axis, self._nodes, dict(self._edges)) == (
            other.axis, other._nodes, dict(other._edges))

    def __hash__(self) -> int:
        return hash((self.axis, self._nodes, tuple(self._edges.items())))

    def __repr__(self) -> str:
        return (f"AxisGraph(axis={self.axis.value}, nodes={len(self._nodes)}, "
                f"edges={len(self._edges)}, slots={self.total_multiplicity})")

    def multiplicity(self, u: str, v: str) -> int:
        return self._edges.get((u, v), 0)

    def successors(self, u: str) -> tuple[str, ...]:
        return self._succ[u]

    def predecessors(self, v: str) -> tuple[str, ...]:
        return self._pred[v]

    def in_degree(self, v: str) -> int:
        """In-degree counting multiplicity."""
        return sum(self._edges[(u, v)] for u in self._pred[v])

    def out_degree(self, u: str) -> int:
        return sum(self._edges[(u, v)] for v in self._succ[u])

    @property
    def total_multiplicity(self) -> int:
        return sum(self._edges.values())

    def edge_slots(self) -> Iterator[tuple[str, str, int]]:
        for (u, v), m in self._edges.items():
            yield u, v, m

    def replace_edges(self, edges: EdgeInput) -> AxisGraph:
        return AxisGraph(self._nodes, edges, self.axis)

    def to_dict(self) -> dict[str, Any]:
        return {
            "axis": self.axis.value,
            "nodes": list(self._nodes),
            "edges": [[u, v, m] for (u, v), m in self._edges.items()],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> AxisGraph:
        return cls(
            data.get("nodes", ()),
            {(u, v): int(m) for u, v, m in data.get("edges", ())},
            Axis(data.get("axis", Axis.TIME.value)),
        )


def build_axis_graph(
    assertions: Iterable[RelationAssertion],
    axis: Axis | str,
    objects: Iterable[str] = (),
) -> AxisGraph:
    """Fold assertions into the multigraph for ``axis``.

    Assertions carrying an ``axis_hint`` for a different axis are skipped.
    Same-generation kinship labels contribute no generation edge.
    """
    axis = Axis(axis)
    domain = AXIS_DOMAIN[axis]
    counts: Counter[Edge] = Counter()
    for a in assertions:
        if a.domain is not domain:
            raise DomainMismatchError(
                f"{a.domain.value} assertion {a.subject!r} {a.label} {a.object!r} "
                f"in a {domain.value} graph"
            )
        if a.axis_hint is not None and a.axis_hint is not axis:
            continue
        e = axis_edge(a, axis)
        if e is not None:
            counts[e] += 1
    nodes = {normalize_id(o) for o in objects}
    return AxisGraph(nodes, counts, axis)


def reverse_edges_under(graph: AxisGraph, rank: Mapping[str, int]) -> tuple[tuple[Edge, int], ...]:
    return tuple(((u, v), m) for (u, v), m in graph.edges.items() if rank[u] > rank[v])


@dataclass(frozen=True)
class NodeOrdering:
    """Bijective rank (1..N) plus the reverse-edge multiset it induces on a graph."""

    rank: Mapping[str, int]
    reverse_edges: tuple[tuple[Edge, int], ...] = ()

    def __post_init__(self) -> None:
        rank = dict(self.rank)
        if sorted(rank.values()) != list(range(1, len(rank) + 1)):
            raise ValueError("rank must be a bijection onto 1..N")
        object.__setattr__(self, "rank", MappingProxyType(rank))
        object.__setattr__(self, "reverse_edges", tuple(self.reverse_edges))

    @classmethod
    def from_sequence(cls, order: Iterable[str], graph: AxisGraph | None = None) -> NodeOrdering:
        order = list(order)
        if len(set(order)) != len(order):
            raise ValueError("duplicate node in order")
        rank = {n: i for i, n in enumerate(order, start=1)}
        rev: tuple[tuple[Edge, int], ...] = ()
        if graph is not None:
            missing = set(graph.nodes) - set(rank)
            if missing:
                raise ValueError(f"ordering does not cover nodes {sorted(missing)}")
            rev = reverse_edges_under(graph, rank)
        return cls(rank, rev)

    @property
    def order(self) -> list[str]:
        return sorted(self.rank, key=self.rank.__getitem__)

    @property
    def n_reverse(self) -> int:
        """Reverse-edge count with multiplicity."""
        return sum(m for _, m in self.reverse_edges)

    def with_graph(self, graph: AxisGraph) -> NodeOrdering:
        return NodeOrdering.from_sequence(self.order, graph)

    def to_dict(self) -> dict[str, Any]:
        return {
            "order": self.order,
            "rank": dict(self.rank),
            "reverse_edges": [[u, v, m] for (u, v), m in self.reverse_edges],
        }


# --- context ----------------------------------------------------------------

@dataclass(frozen=True)
class PositionFact:
    """Absolute coordinates of one object."""

    obj: str
    x: float
    y: float


@dataclass(frozen=True)
class OffsetFact:
    """``obj`` sits at ``ref + (dx, dy)``."""

    obj: str
    ref: str
    dx: float
    dy: float


Fact = Union[PositionFact, OffsetFact]


@dataclass(frozen=True)
class Context:
    """Trusted ground-truth information given alongside the questions.

    ``mode`` is derived: EMPTY with no information, FULL when the closure fixes the
    relation of every ordered pair (every evaluated pair for kinship), else PARTIAL.
    """

    domain: Domain
    objects: tuple[str, ...]
    assertions: tuple[RelationAssertion, ...] = ()
    facts: tuple[Fact, ...] = ()
    mode: ContextMode = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "domain", Domain(self.domain))
        object.__setattr__(self, "objects", tuple(normalize_id(o) for o in self.objects))
        object.__setattr__(self, "assertions", tuple(self.assertions))
        object.__setattr__(self, "facts", tuple(self.facts))
        for a in self.assertions:
            if a.source is not Source.GROUND_TRUTH:
                raise ContextError("context assertions must have source=ground_truth")
            if a.domain is not self.domain:
                raise DomainMismatchError("context assertion outside the context domain")
        if not self.assertions and not self.facts:
            mode = ContextMode.EMPTY
        elif self._is_full():
            mode = ContextMode.FULL
        else:
            mode = ContextMode.PARTIAL
        object.__setattr__(self, "mode", mode)

    def _is_full(self) -> bool:
        n = len(self.objects)
        if self.domain is Domain.KINSHIP:
            return self.kinship_closure.is_complete
        return all(len(self.axis_closure(ax)) == n * (n - 1) // 2 for ax in DOMAIN_AXES[self.domain])

    @cached_property
    def _orders(self) -> dict[Axis, frozenset[Edge]]:
        if self.domain is Domain.KINSHIP:
            raise ContextError("kinship contexts have no axis closure")
        edges: dict[Axis, set[Edge]] = {ax: set() for ax in DOMAIN_AXES[self.domain]}
        if self.facts:
            pos = _solve_positions(self.facts)
            placed = sorted(pos)
            for i, a in enumerate(placed):
                for b in placed[i + 1:]:
                    for k, ax in enumerate(DOMAIN_AXES[self.domain]):
                        va, vb = pos[a][k], pos[b][k]
                        if va < vb:
                            edges[ax].add((a, b))
                        elif vb < va:
                            edges[ax].add((b, a))
        for a in self.assertions:
            for ax in DOMAIN_AXES[self.domain]:
                e = axis_edge(a, ax)
                if e is not None:
                    edges[ax].add(e)
        out = {}
        for ax, es in edges.items():
            closed = _transitive_pairs(self.objects, es)
            for u, v in closed:
                if (v, u) in closed:
                    raise ContextError(f"contradictory context on {ax.value}: {u!r} vs {v!r}")
            out[ax] = frozenset(closed)
        return out

    def axis_closure(self, axis: Axis | str) -> frozenset[Edge]:
        """All precedence pairs (u, v) entailed on ``axis``."""
        return self._orders[Axis(axis)]

    @cached_property
    def kinship_closure(self):  # -> relcheck.kinship.KinshipClosure
        if self.domain is not Domain.KINSHIP:
            raise ContextError("not a kinship context")
        from .kinship import closure_from_seeds

        return closure_from_seeds(self.assertions, persons=self.objects)

    def closure(self) -> dict[Edge, str]:
        """Entailed label for every determined ordered pair."""
        if self.domain is Domain.KINSHIP:
            return dict(self.kinship_closure.labels)
        out: dict[Edge, str] = {}
        if self.domain is Domain.TEMPORAL:
            for u, v in self.axis_closure(Axis.TIME):
                out[(u, v)] = "before"
                out[(v, u)] = "after"
            return out
        xs, ys = self.axis_closure(Axis.X), self.axis_closure(Axis.Y)
        for a in self.objects:
            for b in self.objects:
                if a == b:
                    continue
                xe = (a, b) if (a, b) in xs else (b, a) if (b, a) in xs else None
                ye = (a, b) if (a, b) in ys else (b, a) if (b, a) in ys else None
                if xe and ye:
                    out[(a, b)] = recompose_spatial(a, b, xe, ye)
        return out


def _solve_positions(facts: Iterable[Fact]) -> dict[str, tuple[float, float]]:
    """Resolve absolute/offset facts to coordinates (translation fixed per component)."""
    absolute: dict[str, tuple[float, float]] = {}
    adj: dict[str, list[tuple[str, float, float]]] = {}
    for f in facts:
        if isinstance(f, PositionFact):
            p = (float(f.x), float(f.y))
            if absolute.setdefault(normalize_id(f.obj), p) != p:
                raise ContextError(f"two positions for {f.obj!r}")
        else:
            o, r = normalize_id(f.obj), normalize_id(f.ref)
            adj.setdefault(o, []).append((r, -float(f.dx), -float(f.dy)))
            adj.setdefault(r, []).append((o, float(f.dx), float(f.dy)))
    pos: dict[str, tuple[float, float]] = {}
    nodes = list(absolute) + sorted(set(adj) - set(absolute))
    for start in nodes:
        if start in pos:
            continue
        pos[start] = absolute.get(start, (0.0, 0.0))
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for v, dx, dy in adj.get(u, ()):
                p = (pos[u][0] + dx, pos[u][1] + dy)
                if v in pos:
                    if abs(pos[v][0] - p[0]) > 1e-9 or abs(pos[v][1] - p[1]) > 1e-9:
                        raise ContextError(f"inconsistent offsets at {v!r}")
                    continue
                if v in absolute and absolute[v] != p:
                    raise ContextError(f"offset contradicts position of {v!r}")
                pos[v] = p
                queue.append(v)
    return pos


def _transitive_pairs(nodes: Iterable[str], edges: Iterable[Edge]) -> set[Edge]:
    succ: dict[str, set[str]] = {}
    for u, v in edges:
        succ.setdefault(u, set()).add(v)
    closed: set[Edge] = set()
    for s in set(nodes) | set(succ):
        seen: set[str] = set()
        stack = list(succ.get(s, ()))
        while stack:
            v = stack.pop()
            if v in seen:
                continue
            seen.add(v)
            stack.extend(succ.get(v, ()))
        closed.update((s, v) for v in seen if v != s)
    return closed


# --- interchange ------------------------------------------------------------

def read_jsonl(path: str | Path) -> list[dict[str, Any]]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rows.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc
    return rows


def write_jsonl(path: str | Path, rows: Iterable[Mapping[str, Any]]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False, sort_keys=True))
            fh.write("\n")


def read_assertions(path: str | Path) -> list[RelationAssertion]:
    """Load the assertion interchange format, dropping (with a warning) invalid self-pairs."""
    out = []
    for rec in read_jsonl(path):
        try:
            out.append(RelationAssertion.from_record(rec))
        except DomainMismatchError:
            raise
        except ValueError as exc:
            logger.warning("skipping record %r: %s", rec, exc)
    return out


def write_assertions(path: str | Path, assertions: Iterable[RelationAssertion]) -> None:
    write_jsonl(path, (a.to_record() for a in assertions))
