from __future__ import annotations

import random
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from relcheck.datagen import load_bundled, true_order
from relcheck.relmodel import NodeOrdering
from relcheck.reportviz import (
    MapPoint, compare_maps, line_chart_svg, map_svg, read_xy_csv, reconstruct_map, write_map_csv,
    write_xy_csv,
)
from relcheck.score import DegenerateInputError


def test_identity_orders_give_diagonal():
    o = NodeOrdering.from_sequence(["a", "b", "c"])
    assert reconstruct_map(o, o) == [MapPoint("a", 1, 1), MapPoint("b", 2, 2), MapPoint("c", 3, 3)]


def test_mismatched_orders_rejected():
    with pytest.raises(ValueError):
        reconstruct_map(NodeOrdering.from_sequence("ab"), NodeOrdering.from_sequence("ac"))


def test_state_reference_map_is_a_bijection():
    ds = load_bundled("us_state")
    pts = reconstruct_map(NodeOrdering.from_sequence(true_order(ds, "x")),
                          NodeOrdering.from_sequence(true_order(ds, "y")))
    assert sorted(p.x for p in pts) == list(range(1, 52)) == sorted(p.y for p in pts)
    assert compare_maps(pts, pts) == {"spearman_x": 1.0, "spearman_y": 1.0}


def test_reversed_axis_and_random_baseline():
    names = [f"o{k}" for k in range(51)]
    fwd = NodeOrdering.from_sequence(names)
    rev = NodeOrdering.from_sequence(names[::-1])
    ref = reconstruct_map(fwd, fwd)
    got = compare_maps(reconstruct_map(rev, fwd), ref)
    assert got["spearman_x"] == pytest.approx(-1.0) and got["spearman_y"] == pytest.approx(1.0)
    rnd = random.Random(0)
    rs = []
    for _ in range(300):
        perm = list(names)
        rnd.shuffle(perm)
        rs.append(compare_maps(reconstruct_map(NodeOrdering.from_sequence(perm), fwd), ref)["spearman_x"])
    assert abs(np.mean(rs)) < 0.03


def test_degenerate_map():
    o = NodeOrdering.from_sequence(["a"])
    with pytest.raises(DegenerateInputError):
        compare_maps(reconstruct_map(o, o), reconstruct_map(o, o))


def test_svg_is_wellformed_and_deterministic(tmp_path):
    o = NodeOrdering.from_sequence(["A&B", "<c>", "d"])
    pts = reconstruct_map(o, o)
    svg = map_svg(pts, title="t & u")
    assert svg == map_svg(pts, title="t & u")
    root = ET.fromstring(svg)
    assert len(root.findall("{http://www.w3.org/2000/svg}circle")) == 3
    chart = line_chart_svg({"ebm": [(0, 0), (0.1, 0.03), (0.3, 0.13)]}, title="sweep")
    assert len(ET.fromstring(chart).findall("{http://www.w3.org/2000/svg}polyline")) == 1


def test_csv_round_trip(tmp_path):
    p = tmp_path / "xy.csv"
    write_xy_csv(p, ["ratio", "err"], [[0.0, 0.0], [0.1, 0.25]])
    assert read_xy_csv(p) == [(0.0, 0.0), (0.1, 0.25)]
    m = tmp_path / "map.csv"
    write_map_csv(m, [MapPoint("a", 1, 2)])
    assert m.read_text() == "object,x_rank,y_rank\na,1,2\n"
