from __future__ import annotations

import json
import random

import pytest

from relcheck.cli import main
from relcheck.llmclient import EndpointConfig, ResponseCache
from relcheck.promptparse import PromptTask, synthetic_response
from relcheck.relmodel import read_jsonl, write_jsonl


def run(*argv) -> int:
    return main([str(a) for a in argv])


@pytest.fixture
def plane(tmp_path):
    """Dataset, prompts and noisy synthetic responses for a 20-point plane instance."""
    ds = tmp_path / "plane.json"
    assert run("gen-data", "--dataset", "plane", "--seed", 3, "--out", ds) == 0
    prompts = tmp_path / "prompts.jsonl"
    assert run("gen-prompts", "--dataset", ds, "--out", prompts) == 0
    data = json.loads(ds.read_text())
    gt = data["ground_truth"]
    rnd = random.Random(0)
    rows = []
    for rec in read_jsonl(prompts):
        t = PromptTask.from_record(rec["task"])
        (xa, ya), (xb, yb) = gt[t.pair[0]], gt[t.pair[1]]
        label = ("north" if ya > yb else "south") + ("east" if xa > xb else "west")
        if rnd.random() < 0.1:
            label = rnd.choice(["northeast", "northwest", "southeast", "southwest"])
        rows.append({"task_id": t.task_id, "raw": synthetic_response(t, label), "status": "done"})
    responses = tmp_path / "responses.jsonl"
    write_jsonl(responses, rows)
    assertions = tmp_path / "assertions.jsonl"
    assert run("parse", "--prompts", prompts, "--responses", responses, "--out", assertions,
               "--stats", tmp_path / "stats.json") == 0
    return tmp_path, ds, prompts, assertions


def rerun_identical(tmp_path, name, *argv):
    a, b = tmp_path / f"{name}1", tmp_path / f"{name}2"
    assert run(*argv, "--out", a) == 0
    assert run(*argv, "--out", b) == 0
    assert a.read_bytes() == b.read_bytes()
    return a


def test_parse_loses_nothing(plane):
    tmp_path, _, prompts, assertions = plane
    stats = json.loads((tmp_path / "stats.json").read_text())
    assert stats["total"] == 380 and stats["parsed"] == 380
    assert len(read_jsonl(assertions)) == 380


def test_subcommands_are_byte_stable(plane):
    tmp_path, ds, _, assertions = plane
    rerun_identical(tmp_path, "score.json", "score", "--assertions", assertions)
    rerun_identical(tmp_path, "score.csv", "score", "--assertions", assertions, "--dataset", ds,
                    "--context", "center_rel")
    rerun_identical(tmp_path, "fix.json", "fix-graph", "--assertions", assertions, "--mode", "remove")
    rerun_identical(tmp_path, "ebm.json", "fix-ebm", "--assertions", assertions, "--axis", "x",
                    "--max-iters", 300)
    rerun_identical(tmp_path, "align.json", "align", "--assertions", assertions, "--dataset", ds)
    rerun_identical(tmp_path, "map.csv", "reconstruct-map", "--assertions", assertions, "--dataset", ds,
                    "--svg", tmp_path / "map.svg")
    rerun_identical(tmp_path, "sweep.csv", "noise-sweep", "--n", 12, "--trials", 2, "--ratios", "0,0.1")
    rerun_identical(tmp_path, "corr.json", "validate-correlation", "--n", 8, "--ratios", "0.05,0.1,0.2")
    rerun_identical(tmp_path, "kin.csv", "kinship-closure", "--dataset", "kinship")


def test_score_outputs(plane):
    tmp_path, ds, _, assertions = plane
    out = tmp_path / "s.csv"
    assert run("score", "--assertions", assertions, "--dataset", ds, "--context", "full", "--out", out) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("dataset") and len(lines) == 3
    assert run("score", "--assertions", assertions, "--reference", "ebm", "--max-iters", 200,
               "--out", tmp_path / "e.json") == 0


def test_fix_graph_dot_and_align_csv(plane):
    tmp_path, ds, _, assertions = plane
    fixed = tmp_path / "fixed.json"
    assert run("fix-graph", "--assertions", assertions, "--dot", tmp_path / "c.dot", "--out", fixed) == 0
    assert (tmp_path / "c_x.dot").read_text().startswith("digraph")
    assert run("align", "--graph", fixed, "--dataset", ds, "--csv", tmp_path / "a.csv",
               "--out", tmp_path / "a.json") == 0
    header = (tmp_path / "a.csv").read_text().splitlines()[0]
    assert header.startswith("axis,gt,trans,model")


def test_noise_plot(tmp_path):
    csv_path = tmp_path / "s.csv"
    assert run("noise-sweep", "--n", 10, "--trials", 2, "--ratios", "0,0.2", "--out", csv_path) == 0
    assert run("noise-plot", "--csv", csv_path, "--out", tmp_path / "s.svg") == 0
    assert (tmp_path / "s.svg").read_text().startswith("<svg")


def test_kinship_closure_with_answers(tmp_path):
    seeds = tmp_path / "seeds.txt"
    seeds.write_text("Z is the son of Y.\nC is the son of E.\nA is the daughter of F.\nD is the father of B.\n"
                     "X is the daughter of A.\nC is the father of Z.\nE is the husband of F.\n"
                     "B is the son of A.\nW is the daughter of D.\nG is the daughter of X.\n")
    answers = tmp_path / "ans.jsonl"
    write_jsonl(answers, [{"subject": "E", "object": "Z", "label": "grandpa"},
                          {"subject": "F", "object": "A", "label": "father"}])
    out = tmp_path / "k.json"
    assert run("kinship-closure", "--seeds", seeds, "--answers", answers, "--out", out) == 0
    rep = json.loads(out.read_text())
    assert json.dumps(rep).count("0.98") >= 1


def test_warm_query_is_offline_and_byte_identical(plane, monkeypatch):
    tmp_path, _, prompts, _ = plane
    monkeypatch.delenv("OPENAI_API_KEY", raising=False)
    cache_dir = tmp_path / "cache"
    # cold cache without a key is a data error (exit 2), not a crash
    assert run("query", "--prompts", prompts, "--cache", cache_dir, "--out", tmp_path / "q0.jsonl") == 2
    cfg = EndpointConfig()
    cache = ResponseCache(cache_dir)
    for rec in read_jsonl(prompts):
        cache.put(cfg.model_name, rec["prompt"], cfg.params, f"answer for {rec['task_id']}")
    a, b = tmp_path / "q1.jsonl", tmp_path / "q2.jsonl"
    assert run("query", "--prompts", prompts, "--cache", cache_dir, "--out", a) == 0
    assert run("query", "--prompts", prompts, "--cache", cache_dir, "--out", b) == 0
    assert a.read_bytes() == b.read_bytes()
    assert len(read_jsonl(a)) == 380


def test_exit_codes(tmp_path, capsys):
    assert run("--help") == 0
    assert run("no-such-command") == 1
    assert run("score") == 1
    assert run("gen-data", "--dataset", "plane", "--mode", "x") == 1
    assert run("score", "--assertions", tmp_path / "missing.jsonl") == 2
    bad = tmp_path / "bad.jsonl"
    bad.write_text("{not json\n")
    assert run("score", "--assertions", bad) == 2
    wrong = tmp_path / "w.jsonl"
    write_jsonl(wrong, [{"subject": "a", "object": "b", "label": "sideways"}])
    assert run("score", "--assertions", wrong) == 2


def test_seed_flag_position(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run("--seed", 5, "gen-data", "--dataset", "plane", "--out", a) == 0
    assert run("gen-data", "--dataset", "plane", "--seed", 5, "--out", b) == 0
    assert a.read_bytes() == b.read_bytes()
