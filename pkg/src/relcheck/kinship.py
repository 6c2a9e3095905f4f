"""Family-tree relation algebra.

Seed facts (parent/child/spouse labels) build a small tree; every other relation
is derived structurally from parent and spouse links rather than by chaining
label strings. Closure rules assume the generator's world: each child has at
most two parents, co-parents are married, spouses share all their children, no
remarriage and no same-gender spouses.
"""

from __future__ import annotations

import re
from collections import deque
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field, replace
from enum import Enum
from types import MappingProxyType

from .relmodel import (
    KINSHIP_LABELS,
    KINSHIP_SUBJECT_GENDER,
    Domain,
    DomainMismatchError,
    RelationAssertion,
    Source,
    make_assertion,
    normalize_id,
)

Pair = tuple[str, str]


class Gender(str, Enum):
    MALE = "male"
    FEMALE = "female"
    UNKNOWN = "unknown"

    @property
    def opposite(self) -> Gender:
        if self is Gender.MALE:
            return Gender.FEMALE
        if self is Gender.FEMALE:
            return Gender.MALE
        return Gender.UNKNOWN


class InconsistentSeeds(ValueError):
    """Seed facts contradict each other or the tree's structural rules."""


class UnrelatedError(LookupError):
    """No label in the vocabulary describes the pair."""


class AmbiguousRelation(ValueError):
    """More than one label fits the pair (only possible in malformed trees)."""


SEED_LABELS = frozenset({"father", "mother", "son", "daughter", "husband", "wife"})

# relation kinds; the label is (kind, gender of the subject)
_LABEL_OF_KIND: Mapping[tuple[str, Gender], str] = MappingProxyType({
    ("spouse", Gender.MALE): "husband", ("spouse", Gender.FEMALE): "wife",
    ("ancestor1", Gender.MALE): "father", ("ancestor1", Gender.FEMALE): "mother",
    ("ancestor2", Gender.MALE): "grandpa", ("ancestor2", Gender.FEMALE): "grandma",
    ("ancestor3", Gender.MALE): "great-grandpa", ("ancestor3", Gender.FEMALE): "great-grandma",
    ("descendant1", Gender.MALE): "son", ("descendant1", Gender.FEMALE): "daughter",
    ("descendant2", Gender.MALE): "grandson", ("descendant2", Gender.FEMALE): "granddaughter",
    ("descendant3", Gender.MALE): "great-grandson",
    ("descendant3", Gender.FEMALE): "great-granddaughter",
    ("sibling", Gender.MALE): "brother", ("sibling", Gender.FEMALE): "sister",
    ("pibling", Gender.MALE): "uncle", ("pibling", Gender.FEMALE): "aunt",
    ("nibling", Gender.MALE): "nephew", ("nibling", Gender.FEMALE): "niece",
    ("cousin", Gender.MALE): "cousin", ("cousin", Gender.FEMALE): "cousin",
    ("parent-in-law", Gender.MALE): "father-in-law",
    ("parent-in-law", Gender.FEMALE): "mother-in-law",
    ("child-in-law", Gender.MALE): "son-in-law",
    ("child-in-law", Gender.FEMALE): "daughter-in-law",
    ("sibling-in-law", Gender.MALE): "brother-in-law",
    ("sibling-in-law", Gender.FEMALE): "sister-in-law",
    ("pibling-in-law", Gender.MALE): "uncle-in-law",
    ("pibling-in-law", Gender.FEMALE): "aunt-in-law",
    ("nibling-in-law", Gender.MALE): "nephew-in-law",
    ("nibling-in-law", Gender.FEMALE): "niece-in-law",
})

KIND_OF_LABEL: Mapping[str, str] = MappingProxyType(
    {label: kind for (kind, _), label in _LABEL_OF_KIND.items()}
)

INVERSE_KIND: Mapping[str, str] = MappingProxyType({
    "spouse": "spouse", "sibling": "sibling", "cousin": "cousin",
    "ancestor1": "descendant1", "ancestor2": "descendant2", "ancestor3": "descendant3",
    "descendant1": "ancestor1", "descendant2": "ancestor2", "descendant3": "ancestor3",
    "pibling": "nibling", "nibling": "pibling",
    "parent-in-law": "child-in-law", "child-in-law": "parent-in-law",
    "sibling-in-law": "sibling-in-law",
    "pibling-in-law": "nibling-in-law", "nibling-in-law": "pibling-in-law",
})

# one marriage hop: (side, blood kind) -> in-law kind.
# "b_spouse": a has blood kind K to b's spouse; "a_spouse": a's spouse has kind K to b.
# Convention: the spouse of a blood uncle/aunt and the uncle/aunt of one's spouse
# are both uncle/aunt-in-law (mirrored for nephew/niece-in-law).
_IN_LAW_KIND: Mapping[tuple[str, str], str] = MappingProxyType({
    ("b_spouse", "ancestor1"): "parent-in-law",
    ("b_spouse", "sibling"): "sibling-in-law",
    ("b_spouse", "pibling"): "pibling-in-law",
    ("b_spouse", "nibling"): "nibling-in-law",
    ("a_spouse", "descendant1"): "child-in-law",
    ("a_spouse", "sibling"): "sibling-in-law",
    ("a_spouse", "pibling"): "pibling-in-law",
    ("a_spouse", "nibling"): "nibling-in-law",
})


def label_for(kind: str, gender: Gender) -> str:
    if gender is Gender.UNKNOWN:
        raise ValueError(f"gender unknown, cannot name {kind}")
    return _LABEL_OF_KIND[(kind, gender)]


def inverse_label(label: str, object_gender: Gender) -> str:
    """If ``a`` is ``label`` of ``b``, the label of ``b`` relative to ``a``."""
    return label_for(INVERSE_KIND[KIND_OF_LABEL[label]], object_gender)


@dataclass(frozen=True)
class Person:
    id: str
    gender: Gender = Gender.UNKNOWN
    generation: int | None = None


@dataclass(frozen=True)
class KinshipTree:
    persons: Mapping[str, Person] = field(default_factory=dict)
    parent_edges: frozenset[Pair] = frozenset()
    spouse_edges: frozenset[frozenset[str]] = frozenset()

    def __post_init__(self) -> None:
        object.__setattr__(self, "persons", MappingProxyType(dict(self.persons)))
        object.__setattr__(self, "parent_edges", frozenset(self.parent_edges))
        object.__setattr__(self, "spouse_edges", frozenset(frozenset(s) for s in self.spouse_edges))

    @classmethod
    def empty(cls, persons: Iterable[str] = ()) -> KinshipTree:
        return cls({p: Person(p) for p in map(normalize_id, persons)})

    def gender(self, p: str) -> Gender:
        return self.persons[p].gender

    def parents(self, c: str) -> frozenset[str]:
        return frozenset(p for p, k in self.parent_edges if k == c)

    def children(self, p: str) -> frozenset[str]:
        return frozenset(k for q, k in self.parent_edges if q == p)

    def spouse(self, p: str) -> str | None:
        for s in self.spouse_edges:
            if p in s:
                (other,) = s - {p}
                return other
        return None

    def siblings(self, p: str) -> frozenset[str]:
        out: set[str] = set()
        for q in self.parents(p):
            out |= self.children(q)
        out.discard(p)
        return frozenset(out)

    def ancestors(self, p: str) -> dict[str, int]:
        """Ancestor -> generation distance (parents at 1)."""
        depth: dict[str, int] = {}
        frontier = deque([(p, 0)])
        while frontier:
            x, d = frontier.popleft()
            for q in self.parents(x):
                if q not in depth:
                    depth[q] = d + 1
                    frontier.append((q, d + 1))
        return depth

    @property
    def genders_complete(self) -> bool:
        return all(p.gender is not Gender.UNKNOWN for p in self.persons.values())


def _with_person(tree: KinshipTree, pid: str, gender: Gender = Gender.UNKNOWN) -> dict[str, Person]:
    persons = dict(tree.persons)
    cur = persons.get(pid, Person(pid))
    if gender is not Gender.UNKNOWN:
        if cur.gender not in (Gender.UNKNOWN, gender):
            raise InconsistentSeeds(f"{pid} would be both {cur.gender.value} and {gender.value}")
        cur = replace(cur, gender=gender)
    persons[pid] = cur
    return persons


def apply_seed(tree: KinshipTree, assertion: RelationAssertion) -> KinshipTree:
    """Add the parent/spouse link and subject gender stated by one seed fact."""
    if assertion.domain is not Domain.KINSHIP:
        raise DomainMismatchError("kinship seed expected")
    label = assertion.label.label
    if label not in SEED_LABELS:
        raise ValueError(f"{label!r} is not a primitive seed label")
    a, b = assertion.subject, assertion.object
    gender = Gender(KINSHIP_SUBJECT_GENDER[label])
    persons = _with_person(tree, a, gender)
    tree = replace(tree, persons=persons)
    # spouses have opposite genders, so a husband/wife seed fixes both
    persons = _with_person(tree, b, gender.opposite if label in ("husband", "wife") else Gender.UNKNOWN)
    parents = set(tree.parent_edges)
    spouses = set(tree.spouse_edges)
    if label in ("father", "mother"):
        parents.add((a, b))
    elif label in ("son", "daughter"):
        parents.add((b, a))
    else:
        spouses.add(frozenset((a, b)))
    out = KinshipTree(persons, frozenset(parents), frozenset(spouses))
    _check_structure(out)
    return out


def _check_structure(tree: KinshipTree) -> None:
    for c in tree.persons:
        if len(tree.parents(c)) > 2:
            raise InconsistentSeeds(f"{c} has more than two parents")
    seen: dict[str, frozenset[str]] = {}
    for s in tree.spouse_edges:
        for p in s:
            if p in seen and seen[p] != s:
                raise InconsistentSeeds(f"{p} has two spouses")
            seen[p] = s
        g = [tree.gender(p) for p in s]
        if g[0] is not Gender.UNKNOWN and g[0] is g[1]:
            raise InconsistentSeeds(f"spouses {sorted(s)} share gender {g[0].value}")
    for p in tree.persons:
        if p in tree.ancestors(p):
            raise InconsistentSeeds(f"{p} is their own ancestor")
    for c in tree.persons:
        ps = list(tree.parents(c))
        if len(ps) == 2 and tree.gender(ps[0]) is not Gender.UNKNOWN \
                and tree.gender(ps[0]) is tree.gender(ps[1]):
            raise InconsistentSeeds(f"both parents of {c} are {tree.gender(ps[0]).value}")
        if tree.spouse(c) in tree.ancestors(c) or any(tree.spouse(c) == k for k in tree.children(c)):
            raise InconsistentSeeds(f"{c} married to an ancestor or child")


def close_tree(tree: KinshipTree) -> KinshipTree:
    """Apply structural inference rules to a fixpoint and assign generations."""
    while True:
        persons = dict(tree.persons)
        parents = set(tree.parent_edges)
        spouses = set(tree.spouse_edges)
        for c in tree.persons:
            ps = tree.parents(c)
            if len(ps) == 2:
                spouses.add(frozenset(ps))
        for s in tree.spouse_edges:
            p, q = sorted(s)
            for k in tree.children(p) | tree.children(q):
                parents.add((p, k))
                parents.add((q, k))
            gp, gq = tree.gender(p), tree.gender(q)
            if gp is Gender.UNKNOWN and gq is not Gender.UNKNOWN:
                persons[p] = replace(persons[p], gender=gq.opposite)
            elif gq is Gender.UNKNOWN and gp is not Gender.UNKNOWN:
                persons[q] = replace(persons[q], gender=gp.opposite)
        nxt = KinshipTree(persons, frozenset(parents), frozenset(spouses))
        _check_structure(nxt)
        if nxt == tree:
            break
        tree = nxt
    return _assign_generations(tree)


def _assign_generations(tree: KinshipTree) -> KinshipTree:
    gen: dict[str, int] = {}
    persons = dict(tree.persons)
    for start in sorted(tree.persons):
        if start in gen:
            continue
        comp = {start: 0}
        queue = deque([start])
        while queue:
            x = queue.popleft()
            links = [(q, -1) for q in tree.parents(x)] + [(k, 1) for k in tree.children(x)]
            s = tree.spouse(x)
            if s is not None:
                links.append((s, 0))
            for y, dg in links:
                g = comp[x] + dg
                if y in comp:
                    if comp[y] != g:
                        raise InconsistentSeeds(f"generation clash at {y}")
                    continue
                comp[y] = g
                queue.append(y)
        low = min(comp.values())
        gen.update({p: g - low for p, g in comp.items()})
    for p in persons:
        persons[p] = replace(persons[p], generation=gen[p])
    return KinshipTree(persons, tree.parent_edges, tree.spouse_edges)


def tree_from_seeds(seeds: Iterable[RelationAssertion], persons: Iterable[str] = ()) -> KinshipTree:
    tree = KinshipTree.empty(persons)
    for s in seeds:
        tree = apply_seed(tree, s)
    return close_tree(tree)


def _blood_kind(tree: KinshipTree, a: str, b: str) -> set[str]:
    kinds = set()
    anc_a, anc_b = tree.ancestors(a), tree.ancestors(b)
    if b in anc_a and anc_a[b] <= 3:
        kinds.add(f"descendant{anc_a[b]}")
    if a in anc_b and anc_b[a] <= 3:
        kinds.add(f"ancestor{anc_b[a]}")
    if b in tree.siblings(a):
        kinds.add("sibling")
    pb, pa = tree.parents(b), tree.parents(a)
    if any(a in tree.siblings(p) for p in pb):
        kinds.add("pibling")
    if any(b in tree.siblings(p) for p in pa):
        kinds.add("nibling")
    if any(q in tree.siblings(p) for p in pa for q in pb):
        kinds.add("cousin")
    return kinds


def relation_kind(tree: KinshipTree, a: str, b: str) -> str:
    if a == b:
        raise ValueError("subject and object must differ")
    if tree.spouse(a) == b:
        return "spouse"
    blood = _blood_kind(tree, a, b)
    if len(blood) > 1:
        raise AmbiguousRelation(f"{a}->{b}: {sorted(blood)}")
    if blood:
        return blood.pop()
    in_law = set()
    sb, sa = tree.spouse(b), tree.spouse(a)
    if sb is not None and sb != a:
        for k in _blood_kind(tree, a, sb):
            if ("b_spouse", k) in _IN_LAW_KIND:
                in_law.add(_IN_LAW_KIND[("b_spouse", k)])
    if sa is not None and sa != b:
        for k in _blood_kind(tree, sa, b):
            if ("a_spouse", k) in _IN_LAW_KIND:
                in_law.add(_IN_LAW_KIND[("a_spouse", k)])
    if len(in_law) > 1:
        raise AmbiguousRelation(f"{a}->{b}: {sorted(in_law)}")
    if not in_law:
        raise UnrelatedError(f"no vocabulary label relates {a} to {b}")
    return in_law.pop()


def derive_relation(tree: KinshipTree, a: str, b: str) -> str:
    """The label describing ``a``'s relation to ``b`` ("a is the LABEL of b")."""
    kind = relation_kind(tree, a, b)
    g = tree.gender(a)
    if g is Gender.UNKNOWN:
        raise ValueError(f"gender of {a} is not determined")
    return label_for(kind, g)


@dataclass(frozen=True)
class KinshipClosure:
    """Derived labels for every ordered pair; pairs out of the vocabulary's reach are ``unrelated``."""

    persons: tuple[str, ...]
    labels: Mapping[Pair, str]
    unrelated: frozenset[Pair]
    genders: Mapping[str, Gender]

    @property
    def evaluated_pairs(self) -> int:
        return len(self.labels)

    @property
    def is_complete(self) -> bool:
        n = len(self.persons)
        return (all(g is not Gender.UNKNOWN for g in self.genders.values())
                and len(self.labels) + len(self.unrelated) == n * (n - 1))


def full_closure(tree: KinshipTree) -> KinshipClosure:
    if not tree.genders_complete:
        unknown = sorted(p for p, v in tree.persons.items() if v.gender is Gender.UNKNOWN)
        raise InconsistentSeeds(f"genders not determined for {unknown}")
    labels: dict[Pair, str] = {}
    unrelated = set()
    persons = tuple(sorted(tree.persons))
    for a in persons:
        for b in persons:
            if a == b:
                continue
            try:
                labels[(a, b)] = derive_relation(tree, a, b)
            except UnrelatedError:
                unrelated.add((a, b))
    return KinshipClosure(
        persons, MappingProxyType(labels), frozenset(unrelated),
        MappingProxyType({p: tree.gender(p) for p in persons}),
    )


def closure_from_seeds(seeds: Iterable[RelationAssertion], persons: Iterable[str] = ()) -> KinshipClosure:
    return full_closure(tree_from_seeds(seeds, persons))


_SEED_RE = re.compile(r"^\s*(?:\d+\.\s*)?(?P<a>.+?)\s+is\s+the\s+(?P<label>[\w-]+)\s+of\s+(?P<b>.+?)\s*\.?\s*$")


def parse_seed_sentence(line: str, source: Source = Source.GROUND_TRUTH) -> RelationAssertion:
    """Parse "Z is the son of Y." (optionally numbered) into an assertion."""
    m = _SEED_RE.match(line)
    if not m:
        raise ValueError(f"not a kinship sentence: {line!r}")
    return make_assertion(m["a"], m["label"], m["b"], source=source)


def seed_sentence(assertion: RelationAssertion) -> str:
    return f"{assertion.subject} is the {assertion.label.label} of {assertion.object}."


def gender_conflicts(assertions: Iterable[RelationAssertion]) -> dict[str, dict[str, list[str]]]:
    """Persons the answers call both male and female, with the offending labels."""
    seen: dict[str, dict[str, list[str]]] = {}
    for a in assertions:
        if a.domain is not Domain.KINSHIP:
            continue
        g = KINSHIP_SUBJECT_GENDER[a.label.label]
        if g is None:
            continue
        seen.setdefault(a.subject, {"male": [], "female": []})[g].append(
            f"{a.label.label} of {a.object}")
    return {p: v for p, v in sorted(seen.items()) if v["male"] and v["female"]}


def check_answers(
    assertions: Iterable[RelationAssertion],
    closure: KinshipClosure,
    *,
    dataset: str = "kinship",
    denominator: int | None = None,
):
    """Error rate of model answers against the closure, plus self-contradicting genders.

    Answers on pairs the vocabulary cannot describe are not evaluated; the default
    denominator is the number of evaluated pairs.
    """
    from .score import KinshipReport, Reference, ScoreMode

    assertions = list(assertions)
    wrong = 0
    for a in assertions:
        truth = closure.labels.get((a.subject, a.object))
        if truth is not None and a.label.label != truth:
            wrong += 1
    denom = closure.evaluated_pairs if denominator is None else int(denominator)
    return KinshipReport(
        dataset=dataset,
        axis=None,
        n_objects=len(closure.persons),
        denominator=denom,
        violating_edges=wrong,
        mode=ScoreMode.ERROR_RATE,
        reference=Reference.GROUND_TRUTH,
        gender_conflicts=gender_conflicts(assertions),
    )


assert set(KIND_OF_LABEL) == set(KINSHIP_LABELS)
