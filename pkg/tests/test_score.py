from __future__ import annotations

import csv
import math

import pytest

from conftest import random_multigraph
from relcheck.ordergraph import min_feedback_edges_exact, node_ordering
from relcheck.relmodel import (
    Axis, AxisGraph, Context, ContextError, Domain, NodeOrdering, Source, build_axis_graph,
    make_assertion,
)
from relcheck.score import (
    DegenerateInputError, pearson, score_no_context, score_with_ground_truth, write_reports_csv,
)

FIVE = ["A", "B", "C", "D", "E"]
GT = Source.GROUND_TRUTH


def chain_context(objs):
    return Context(Domain.TEMPORAL, objs, tuple(
        make_assertion(objs[k], "before", objs[k + 1], source=GT) for k in range(len(objs) - 1)))


def all_pairs_truth(objs):
    pos = {o: k for k, o in enumerate(objs)}
    return [make_assertion(a, "before" if pos[a] < pos[b] else "after", b)
            for a in objs for b in objs if a != b]


def test_one_reverse_edge_in_five_is_ten_percent():
    g = AxisGraph(FIVE, [("A", "B"), ("B", "C"), ("C", "D"), ("D", "E"), ("E", "A")])
    rep = score_no_context(g, node_ordering(g))
    assert (rep.violating_edges, rep.denominator) == (1, 10)
    assert rep.score == 0.1 and rep.percent == 10.00


def test_simply_ordered_is_zero():
    g = AxisGraph(FIVE, [(a, b) for i, a in enumerate(FIVE) for b in FIVE[i + 1:]])
    assert score_no_context(g, node_ordering(g)).percent == 0.0


def test_contradictory_double_edges():
    # each unordered pair carries both directions: every pair contributes one reverse slot
    both = {(a, b): 1 for a in FIVE for b in FIVE if a != b}
    g = AxisGraph(FIVE, both)
    rep = score_no_context(g, node_ordering(g))
    assert g.total_multiplicity == 20 and rep.violating_edges == 10 and rep.percent == 100.00
    # both orientations asked twice (two templates): the multiplicity pushes it past 100%
    g2 = AxisGraph(FIVE, {e: 2 for e in both})
    rep2 = score_no_context(g2, node_ordering(g2))
    assert rep2.violating_edges == 20 and rep2.percent == 200.00 and rep2.score > 1


def test_ground_truth_two_errors_in_twenty():
    answers = all_pairs_truth(FIVE)
    answers[0] = make_assertion("A", "after", "B")
    answers[7] = make_assertion(answers[7].subject, "after" if answers[7].label.label == "before"
                                else "before", answers[7].object)
    rep = score_with_ground_truth(answers, chain_context(FIVE))
    assert (rep.violating_edges, rep.denominator) == (2, 20)
    assert rep.percent == 10.00
    assert score_with_ground_truth(all_pairs_truth(FIVE), chain_context(FIVE)).percent == 0.0


def test_majority_order_can_disagree_with_truth():
    truth = ["Alice", "Bob", "Diana", "David"]
    answers = all_pairs_truth(truth)
    # the model consistently swaps Diana and David, in both question orders
    answers = [make_assertion(a.subject, "before" if a.label.label == "after" else "after", a.object)
               if {a.subject, a.object} == {"Diana", "David"} else a for a in answers]
    g = build_axis_graph(answers, Axis.TIME)
    assert score_no_context(g, node_ordering(g)).violating_edges == 0
    assert node_ordering(g).order == ["Alice", "Bob", "David", "Diana"]
    rep = score_with_ground_truth(answers, chain_context(truth))
    assert rep.violating_edges == 2 and rep.percent == round(100 * 2 / 12, 2)


def test_denominator_override_and_context_guard():
    answers = all_pairs_truth(FIVE)
    answers[0] = make_assertion("A", "after", "B")
    assert score_with_ground_truth(answers, chain_context(FIVE), denominator=10).percent == 10.0
    partial = Context(Domain.TEMPORAL, FIVE, (make_assertion("A", "before", "B", source=GT),))
    with pytest.raises(ContextError):
        score_with_ground_truth(answers, partial)


def test_spatial_ground_truth_scores_per_axis():
    from relcheck.datagen import emit_context, gen_plane, truth_assertions
    ds = gen_plane(3)
    ans = truth_assertions(ds, source=Source.MODEL)
    ctx = emit_context(ds)
    assert score_with_ground_truth(ans, ctx, axis="x").violating_edges == 0
    with pytest.raises(ValueError):
        score_with_ground_truth(ans, ctx)


def test_degenerate_inputs():
    g = AxisGraph(["A"], [])
    with pytest.raises(DegenerateInputError):
        score_no_context(g, NodeOrdering({"A": 1}))
    with pytest.raises(ValueError):
        score_no_context(AxisGraph("AB", [("A", "B")]), NodeOrdering({"A": 1}))


def test_monotonicity_of_violations(rng):
    for _ in range(100):
        g = random_multigraph(rng, rng.randint(2, 7), rng.uniform(0.1, 0.7))
        o = node_ordering(g)
        base = score_no_context(g, o).violating_edges
        lo, hi = o.order[0], o.order[-1]
        m = rng.randint(1, 3)
        fwd = dict(g.edges)
        fwd[(lo, hi)] = fwd.get((lo, hi), 0) + m
        assert score_no_context(g.replace_edges(fwd), o).violating_edges == base
        back = dict(g.edges)
        back[(hi, lo)] = back.get((hi, lo), 0) + m
        assert score_no_context(g.replace_edges(back), o).violating_edges == base + m


def test_upper_bound_on_exact_minimum(rng):
    for _ in range(100):
        g = random_multigraph(rng, rng.randint(2, 7), rng.uniform(0.1, 0.9))
        rep = score_no_context(g, node_ordering(g))
        assert rep.violating_edges >= min_feedback_edges_exact(g)
        assert (rep.violating_edges == 0) == (min_feedback_edges_exact(g) == 0)


def test_pearson():
    xs = [1.0, 2.0, 3.5, -1.0]
    assert pearson(xs, xs) == pytest.approx(1.0, abs=1e-15)
    assert pearson(xs, [-x for x in xs]) == pytest.approx(-1.0, abs=1e-15)
    x, y = [1, 2, 3], [2, 4, 6.5]
    mx, my = 2.0, 12.5 / 3
    num = sum((a - mx) * (b - my) for a, b in zip(x, y))
    den = math.sqrt(sum((a - mx) ** 2 for a in x) * sum((b - my) ** 2 for b in y))
    assert abs(pearson(x, y) - num / den) < 1e-12
    with pytest.raises(DegenerateInputError):
        pearson([1, 1, 1], [1, 2, 3])
    with pytest.raises(DegenerateInputError):
        pearson([1], [1])


def test_reports_csv(tmp_path):
    g = AxisGraph(FIVE, [("A", "B"), ("B", "A")])
    rep = score_no_context(g, node_ordering(g), dataset="toy")
    path = tmp_path / "r.csv"
    write_reports_csv(path, [rep])
    rows = list(csv.DictReader(open(path)))
    assert rows[0]["dataset"] == "toy" and float(rows[0]["percent"]) == 10.0
