"""Datasets: bundled real-world lists, the synthetic plane, and random kinship trees."""

from __future__ import annotations

import json
import random
import re
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Any

from .kinship import (
    Gender,
    InconsistentSeeds,
    KinshipTree,
    Person,
    _assign_generations,
    parse_seed_sentence,
    tree_from_seeds,
)
from .relmodel import (
    Context,
    Domain,
    OffsetFact,
    PositionFact,
    RelationAssertion,
    Source,
    make_assertion,
    recompose_spatial,
)

BUNDLED = ("art", "ancient", "recent", "us_city", "us_state")
DATASET_SIZES = {
    "art": 20, "ancient": 20, "recent": 20, "us_city": 20, "us_state": 51, "plane": 20, "kinship": 11,
}
PLANE_SIZE = 20
KINSHIP_NAMES = ("A", "B", "C", "D", "E", "F", "G", "W", "X", "Y", "Z")
SEED_RETRY_CAP = 1000

PAPER_KINSHIP_SEEDS = (
    "Z is the son of Y.",
    "C is the son of E.",
    "A is the daughter of F.",
    "D is the father of B.",
    "X is the daughter of A.",
    "C is the father of Z.",
    "E is the husband of F.",
    "B is the son of A.",
    "W is the daughter of D.",
    "G is the daughter of X.",
)


class Regime(str, Enum):
    XY_POS = "xy_pos"
    CENTER_REL = "center_rel"
    ORDERED_REL = "ordered_rel"


class GenerationError(RuntimeError):
    pass


@dataclass(frozen=True)
class Dataset:
    name: str
    domain: Domain
    objects: tuple[str, ...]
    ground_truth: Mapping[str, Any] | None = None
    seeds: tuple[RelationAssertion, ...] = ()
    meta: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "domain", Domain(self.domain))
        object.__setattr__(self, "objects", tuple(self.objects))
        if len(set(self.objects)) != len(self.objects):
            raise ValueError("duplicate objects")
        expected = DATASET_SIZES.get(self.name)
        if expected is not None and len(self.objects) != expected:
            raise ValueError(f"{self.name} must have {expected} objects, got {len(self.objects)}")
        if self.ground_truth is not None:
            missing = set(self.objects) - set(self.ground_truth)
            if missing:
                raise ValueError(f"ground truth missing for {sorted(missing)}")

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "name": self.name,
            "domain": self.domain.value,
            "objects": list(self.objects),
            "ground_truth": dict(self.ground_truth) if self.ground_truth is not None else None,
        }
        if self.seeds:
            out["seeds"] = [f"{s.subject} is the {s.label.label} of {s.object}." for s in self.seeds]
        if self.meta:
            out["meta"] = dict(self.meta)
        return out

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> Dataset:
        gt = data.get("ground_truth")
        if gt is not None and data["domain"] == Domain.SPATIAL.value:
            gt = {k: tuple(v) for k, v in gt.items()}
        seeds = tuple(parse_seed_sentence(s) for s in data.get("seeds", ()))
        meta = {k: v for k, v in data.items()
                if k not in ("name", "domain", "objects", "ground_truth", "seeds", "meta")}
        meta.update(data.get("meta", {}))
        return cls(data["name"], Domain(data["domain"]), tuple(data["objects"]), gt, seeds, meta)


def save_dataset(path: str | Path, ds: Dataset) -> None:
    Path(path).write_text(json.dumps(ds.to_dict(), indent=1, sort_keys=True, ensure_ascii=False) + "\n",
                          encoding="utf-8")


def read_dataset(path: str | Path) -> Dataset:
    return Dataset.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def load_bundled(name: str) -> Dataset:
    if name not in BUNDLED:
        raise KeyError(f"unknown bundled dataset {name!r}; choose from {BUNDLED}")
    text = resources.files("relcheck").joinpath("data", f"{name}.json").read_text(encoding="utf-8")
    return Dataset.from_dict(json.loads(text))


def load_dataset(name: str, seed: int = 0) -> Dataset:
    """Any dataset by name; ``plane`` and ``kinship`` are generated (kinship seed 0 is fixed)."""
    if name == "plane":
        return gen_plane(seed)
    if name == "kinship":
        return paper_kinship()
    return load_bundled(name)


# --- temporal values -------------------------------------------------------

_DATE_RE = re.compile(r"^(-?\d+)(?:-(\d{1,2}))?(?:-(\d{1,2}))?$")

def temporal_key(value: str | int) -> tuple[int, int, int]:
    """"YYYY", "YYYY-MM" or "YYYY-MM-DD" as a sortable tuple; a leading minus marks BCE."""
    if isinstance(value, int):
        return (value, 0, 0)
    m = _DATE_RE.match(str(value).strip())
    if not m:
        raise ValueError(f"unrecognized date {value!r}")
    return (int(m[1]), int(m[2] or 0), int(m[3] or 0))


# --- plane -----------------------------------------------------------------

def gen_plane(seed: int = 0) -> Dataset:
    rng = random.Random(seed)
    values = list(range(-10, 10))
    xs = rng.sample(values, len(values))
    ys = rng.sample(values, len(values))
    objs = tuple(f"Object_{k}" for k in range(PLANE_SIZE))
    return Dataset("plane", Domain.SPATIAL, objs, {o: (x, y) for o, x, y in zip(objs, xs, ys)},
                   meta={"seed": seed})


# --- kinship ---------------------------------------------------------------

def paper_kinship() -> Dataset:
    seeds = tuple(parse_seed_sentence(s) for s in PAPER_KINSHIP_SEEDS)
    tree = tree_from_seeds(seeds, KINSHIP_NAMES)
    return _kinship_dataset(tree, seeds, {"instance": "fixed"})


def _kinship_dataset(tree: KinshipTree, seeds: Sequence[RelationAssertion], meta: dict) -> Dataset:
    gt = {p: tree_record(tree, p) for p in sorted(tree.persons)}
    return Dataset("kinship", Domain.KINSHIP, tuple(sorted(tree.persons)), gt, tuple(seeds), meta)


def tree_record(tree: KinshipTree, p: str) -> dict[str, Any]:
    return {
        "gender": tree.gender(p).value,
        "generation": tree.persons[p].generation,
        "parents": sorted(tree.parents(p)),
        "spouse": tree.spouse(p),
    }


def _random_tree(rng: random.Random) -> KinshipTree:
    names = list(KINSHIP_NAMES)
    rng.shuffle(names)
    it = iter(names)
    persons: dict[str, Gender] = {}
    parents: set[tuple[str, str]] = set()
    spouses: set[frozenset[str]] = set()

    def couple(first_gender: Gender) -> tuple[str, str]:
        a, b = next(it), next(it)
        persons[a], persons[b] = first_gender, first_gender.opposite
        spouses.add(frozenset((a, b)))
        return a, b

    g0 = couple(rng.choice((Gender.MALE, Gender.FEMALE)))
    g1_couples = []
    for _ in range(2):
        child, spouse = next(it), next(it)
        persons[child] = rng.choice((Gender.MALE, Gender.FEMALE))
        persons[spouse] = persons[child].opposite
        spouses.add(frozenset((child, spouse)))
        parents.update({(g0[0], child), (g0[1], child)})
        g1_couples.append((child, spouse))
    k = rng.choice((2, 3, 4))
    counts = [k, 4 - k]
    rng.shuffle(counts)
    g2 = []
    for (a, b), c in zip(g1_couples, counts):
        for _ in range(c):
            kid = next(it)
            persons[kid] = rng.choice((Gender.MALE, Gender.FEMALE))
            parents.update({(a, kid), (b, kid)})
            g2.append(kid)
    daughter = next(it)
    persons[daughter] = Gender.FEMALE
    parents.add((rng.choice(g2), daughter))
    tree = KinshipTree({p: Person(p, g) for p, g in persons.items()}, frozenset(parents), frozenset(spouses))
    return _assign_generations(tree)


_PARENT_LABEL = {Gender.MALE: "father", Gender.FEMALE: "mother"}
_CHILD_LABEL = {Gender.MALE: "son", Gender.FEMALE: "daughter"}
_SPOUSE_LABEL = {Gender.MALE: "husband", Gender.FEMALE: "wife"}


def primitive_facts(tree: KinshipTree, rng: random.Random) -> list[RelationAssertion]:
    """One randomly phrased seed per parent link and per marriage."""
    out = []
    for p, c in sorted(tree.parent_edges):
        if rng.random() < 0.5:
            out.append(make_assertion(p, _PARENT_LABEL[tree.gender(p)], c, source=Source.GROUND_TRUTH))
        else:
            out.append(make_assertion(c, _CHILD_LABEL[tree.gender(c)], p, source=Source.GROUND_TRUTH))
    for s in sorted(tree.spouse_edges, key=sorted):
        a, b = sorted(s)
        if rng.random() < 0.5:
            a, b = b, a
        out.append(make_assertion(a, _SPOUSE_LABEL[tree.gender(a)], b, source=Source.GROUND_TRUTH))
    return out


def _reproduces(tree: KinshipTree, seeds: Sequence[RelationAssertion]) -> bool:
    try:
        got = tree_from_seeds(seeds, tree.persons)
    except InconsistentSeeds:
        return False
    return (got.parent_edges == tree.parent_edges and got.spouse_edges == tree.spouse_edges
            and all(got.gender(p) is tree.gender(p) for p in tree.persons))


def _prune(tree: KinshipTree, facts: list[RelationAssertion], target: int,
           rng: random.Random) -> list[RelationAssertion] | None:
    # drop facts in random order while the remainder still pins the tree down
    kept = list(facts)
    order = list(range(len(facts)))
    rng.shuffle(order)
    for idx in order:
        if len(kept) == target:
            break
        trial = [f for f in kept if f is not facts[idx]]
        if _reproduces(tree, trial):
            kept = trial
    return kept if len(kept) == target else None


def gen_kinship_tree(seed: int = 0, n_seeds: int = 10) -> tuple[Dataset, tuple[RelationAssertion, ...]]:
    """Random 4-generation tree plus ``n_seeds`` phrased facts that determine it."""
    rng = random.Random(seed)
    for _ in range(SEED_RETRY_CAP):
        tree = _random_tree(rng)
        facts = primitive_facts(tree, rng)
        if not _reproduces(tree, facts):
            continue
        chosen = _prune(tree, facts, n_seeds, rng)
        if chosen is None:
            continue
        rng.shuffle(chosen)
        ds = _kinship_dataset(tree, chosen, {"seed": seed})
        return ds, tuple(chosen)
    raise GenerationError(f"no uniquely determining seed set within {SEED_RETRY_CAP} draws")


# --- contexts --------------------------------------------------------------

def emit_context(dataset: Dataset, regime: Regime | str = Regime.XY_POS) -> Context:
    """Ground-truth context for a dataset; ``regime`` applies to spatial data."""
    if dataset.ground_truth is None:
        raise ValueError(f"dataset {dataset.name!r} has no ground truth")
    gt = dataset.ground_truth
    objs = dataset.objects
    if dataset.domain is Domain.KINSHIP:
        return Context(Domain.KINSHIP, objs, dataset.seeds)
    if dataset.domain is Domain.TEMPORAL:
        # ordinal encoding keeps facts numeric
        keys = sorted({temporal_key(gt[o]) for o in objs})
        pos = {k: i for i, k in enumerate(keys)}
        return Context(Domain.TEMPORAL, objs, facts=[PositionFact(o, pos[temporal_key(gt[o])], 0) for o in objs])
    regime = Regime(regime)
    if regime is Regime.XY_POS:
        facts = [PositionFact(o, *gt[o]) for o in objs]
    elif regime is Regime.CENTER_REL:
        c = objs[0]
        facts = [OffsetFact(o, c, gt[o][0] - gt[c][0], gt[o][1] - gt[c][1]) for o in objs[1:]]
    else:
        facts = [
            OffsetFact(objs[k + 1], objs[k], gt[objs[k + 1]][0] - gt[objs[k]][0],
                       gt[objs[k + 1]][1] - gt[objs[k]][1])
            for k in range(len(objs) - 1)
        ]
    return Context(Domain.SPATIAL, objs, facts=facts)


def describe_fact(fact: PositionFact | OffsetFact) -> str:
    if isinstance(fact, PositionFact):
        return f"{fact.obj} is at ({_num(fact.x)}, {_num(fact.y)})."
    ew = "east" if fact.dx >= 0 else "west"
    ns = "north" if fact.dy >= 0 else "south"
    return (f"{fact.obj} to {fact.ref} is {ew} ({_num(abs(fact.dx))} units) "
            f"and {ns} ({_num(abs(fact.dy))} units).")


def _num(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def truth_assertions(dataset: Dataset, *, source: Source = Source.GROUND_TRUTH) -> list[RelationAssertion]:
    """True label for every ordered pair the ground truth decides."""
    if dataset.ground_truth is None:
        raise ValueError(f"dataset {dataset.name!r} has no ground truth")
    gt = dataset.ground_truth
    objs = dataset.objects
    out = []
    if dataset.domain is Domain.KINSHIP:
        closure = emit_context(dataset).kinship_closure
        for (a, b), label in sorted(closure.labels.items()):
            out.append(make_assertion(a, label, b, source=source, dataset=dataset.name))
        return out
    for a in objs:
        for b in objs:
            if a == b:
                continue
            if dataset.domain is Domain.TEMPORAL:
                ka, kb = temporal_key(gt[a]), temporal_key(gt[b])
                if ka == kb:
                    continue
                label = "before" if ka < kb else "after"
            else:
                (xa, ya), (xb, yb) = gt[a], gt[b]
                if xa == xb or ya == yb:
                    continue
                label = recompose_spatial(a, b, (a, b) if xa < xb else (b, a), (a, b) if ya < yb else (b, a))
            out.append(make_assertion(a, label, b, source=source, dataset=dataset.name))
    return out


def true_order(dataset: Dataset, axis: str = "time") -> list[str]:
    """Objects sorted along one axis of the ground truth: ``time``, ``x`` or ``y``."""
    gt = dataset.ground_truth
    if gt is None:
        raise ValueError("no ground truth")
    if dataset.domain is Domain.TEMPORAL:
        return sorted(dataset.objects, key=lambda o: (temporal_key(gt[o]), o))
    k = {"x": 0, "y": 1}[axis]
    return sorted(dataset.objects, key=lambda o: (gt[o][k], o))
