"""Command-line pipeline. Every stage reads and writes plain files.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from collections.abc import Sequence
from pathlib import Path
from typing import Any

from . import align as align_mod
from . import datagen, ebmfix, kinship, llmclient, ordergraph, promptparse, reportviz, score, validation
from .relmodel import (
    DOMAIN_AXES,
    Axis,
    AxisGraph,
    ContextError,
    Domain,
    DomainMismatchError,
    read_assertions,
    read_jsonl,
    write_assertions,
    write_jsonl,
    build_axis_graph,
)

log = logging.getLogger("relcheck")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse exits with 2 by default
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# --- helpers ---------------------------------------------------------------

def _dump(obj: Any, out: str | None) -> None:
    text = json.dumps(obj, indent=1, sort_keys=True, ensure_ascii=False) + "\n"
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _dataset(arg: str, seed: int) -> datagen.Dataset:
    p = Path(arg)
    if p.suffix == ".json" or p.exists():
        return datagen.read_dataset(p)
    return datagen.load_dataset(arg, seed)


def _axes(domain: Domain, axis: str | None) -> list[Axis]:
    if axis is None:
        return list(DOMAIN_AXES[domain])
    ax = Axis(axis)
    if ax not in DOMAIN_AXES[domain]:
        raise UsageError(f"axis {axis} does not apply to {domain.value} data")
    return [ax]


def _load_graphs(args) -> tuple[Domain, dict[Axis, AxisGraph], datagen.Dataset | None]:
    assertions = read_assertions(args.assertions)
    if not assertions:
        raise ValueError(f"{args.assertions} holds no assertions")
    domain = assertions[0].domain
    ds = _dataset(args.dataset, args.seed) if getattr(args, "dataset", None) else None
    objects = ds.objects if ds else ()
    graphs = {ax: build_axis_graph(assertions, ax, objects) for ax in _axes(domain, args.axis)}
    return domain, graphs, ds


def _ratios(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise UsageError(f"bad --ratios {text!r}") from exc


# --- subcommands -----------------------------------------------------------

def cmd_gen_data(args) -> None:
    if args.dataset == "kinship" and args.random_tree:
        ds, _ = datagen.gen_kinship_tree(args.seed)
    else:
        ds = datagen.load_dataset(args.dataset, args.seed)
    if args.out in (None, "-"):
        _dump(ds.to_dict(), None)
    else:
        datagen.save_dataset(args.out, ds)


def cmd_gen_prompts(args) -> None:
    ds = _dataset(args.dataset, args.seed)
    ctx = None
    if args.context != "none":
        regime = "xy_pos" if args.context == "full" else args.context
        ctx = datagen.emit_context(ds, regime)
    elif ds.domain is Domain.KINSHIP:
        ctx = datagen.emit_context(ds)
    tasks = promptparse.make_tasks(ds.name, ds.domain, ds.objects, args.template, ctx)
    rows = [{"task_id": t.task_id, "pair": list(t.pair), "prompt": promptparse.render_prompt(t),
             "task": t.to_record()} for t in tasks]
    _write_rows(rows, args.out)


def _write_rows(rows, out: str | None) -> None:
    if out in (None, "-"):
        for r in rows:
            sys.stdout.write(json.dumps(r, sort_keys=True, ensure_ascii=False) + "\n")
    else:
        write_jsonl(out, rows)


def cmd_query(args) -> None:
    cfg = llmclient.EndpointConfig.from_file(args.config) if args.config else llmclient.EndpointConfig()
    if args.model:
        cfg = llmclient.EndpointConfig.from_mapping({**cfg.__dict__, "model_name": args.model})
    jobs = llmclient.make_jobs(read_jsonl(args.prompts), cfg)
    done, stats = llmclient.run_batch(jobs, cfg, llmclient.ResponseCache(args.cache))
    _write_rows([j.to_record() for j in done], args.out)
    log.info("query: %d cached, %d network calls, %d retries, %d failed",
             stats.cache_hits, stats.network_calls, stats.retries, stats.failed)


def cmd_parse(args) -> None:
    tasks = {}
    for rec in read_jsonl(args.prompts):
        t = promptparse.PromptTask.from_record(rec["task"])
        tasks[t.task_id] = t
    stats = promptparse.IngestStats()
    records = [r for r in read_jsonl(args.responses) if r.get("status", "done") == "done"]
    results = list(promptparse.parse_records(records, tasks, stats))
    write_assertions(args.out, [r.assertion for r in results if r.assertion is not None])
    if args.stats:
        _dump(stats.to_dict(), args.stats)
    else:
        sys.stderr.write(json.dumps(stats.to_dict(), sort_keys=True) + "\n")


def cmd_score(args) -> None:
    assertions = read_assertions(args.assertions)
    if not assertions:
        raise ValueError(f"{args.assertions} holds no assertions")
    domain = assertions[0].domain
    ds = _dataset(args.dataset, args.seed) if args.dataset else None
    reports = []
    if args.context != "none":
        if ds is None:
            raise UsageError("--context needs --dataset")
        ctx = datagen.emit_context(ds, "xy_pos" if args.context == "full" else args.context)
        if domain is Domain.KINSHIP:
            rep = kinship.check_answers(assertions, ctx.kinship_closure, dataset=ds.name,
                                        denominator=args.denominator)
            reports.append(rep)
        else:
            for ax in _axes(domain, args.axis):
                reports.append(score.score_with_ground_truth(
                    assertions, ctx, axis=ax, dataset=ds.name, denominator=args.denominator))
    else:
        objects = ds.objects if ds else ()
        for ax in _axes(domain, args.axis):
            g = build_axis_graph(assertions, ax, objects)
            if args.reference == "ebm":
                _, order = ebmfix.run_ebm_graph(g, seed=args.seed, eta=args.eta,
                                                max_iters=args.max_iters, tol=args.tol)
                ref = score.Reference.EBM_ORDER
            else:
                order, ref = ordergraph.node_ordering(g), score.Reference.GRAPH_ORDER
            reports.append(score.score_no_context(g, order, dataset=ds.name if ds else "", reference=ref))
    if args.out and args.out.endswith(".csv"):
        score.write_reports_csv(args.out, reports)
    else:
        _dump([r.to_dict() for r in reports], args.out)


def cmd_fix_graph(args) -> None:
    _, graphs, _ = _load_graphs(args)
    out = {}
    for ax, g in graphs.items():
        repaired, ordering = ordergraph.fix_to_simply_ordered(g, args.mode)
        before = ordergraph.node_ordering(g)
        out[ax.value] = {
            "ordering": before.order,
            "rank": dict(before.rank),
            "reverse_edges": [[u, v, m] for (u, v), m in before.reverse_edges],
            "repaired_graph": repaired.to_dict(),
            "mode": args.mode,
        }
        if args.dot:
            dot_path = Path(args.dot)
            if len(graphs) > 1:
                dot_path = dot_path.with_name(f"{dot_path.stem}_{ax.value}{dot_path.suffix}")
            dot_path.write_text(ordergraph.tarjan_scc(g).to_dot(), encoding="utf-8")
    _dump(out, args.out)


def cmd_fix_ebm(args) -> None:
    _, graphs, _ = _load_graphs(args)
    out = {}
    traces = []
    for ax, g in graphs.items():
        state, ordering = ebmfix.run_ebm_graph(g, seed=args.seed, eta=args.eta,
                                               max_iters=args.max_iters, tol=args.tol,
                                               patience=args.patience or None)
        out[ax.value] = {
            "final_coords": {k: round(v, 12) for k, v in sorted(state.coords.items())},
            "ordering": ordering.order,
            "energy_trace": [[i, e] for i, e in state.energy_trace],
            "final_energy": state.energy_trace[-1][1],
        }
        traces.extend([ax.value, i, e] for i, e in state.energy_trace)
    if args.trace_csv:
        reportviz.write_xy_csv(args.trace_csv, ["axis", "iteration", "energy"], traces)
    _dump(out, args.out)


def cmd_kinship_closure(args) -> None:
    if args.seeds:
        lines = [ln for ln in Path(args.seeds).read_text(encoding="utf-8").splitlines() if ln.strip()]
        seeds = [kinship.parse_seed_sentence(ln) for ln in lines]
    else:
        ds = _dataset(args.dataset or "kinship", args.seed)
        seeds = list(ds.seeds)
    cl = kinship.closure_from_seeds(seeds)
    out: dict[str, Any] = {
        "persons": list(cl.persons),
        "genders": {p: g.value for p, g in cl.genders.items()},
        "labels": [[a, lab, b] for (a, b), lab in sorted(cl.labels.items())],
        "unrelated": sorted([a, b] for a, b in cl.unrelated),
        "evaluated_pairs": cl.evaluated_pairs,
    }
    if args.answers:
        rep = kinship.check_answers(read_assertions(args.answers), cl, denominator=args.denominator)
        out["report"] = rep.to_dict()
    _dump(out, args.out)


def _read_graph(path: str) -> dict[str, AxisGraph]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if "nodes" in data:
        g = AxisGraph.from_dict(data)
        return {g.axis.value: g}
    # fix-graph output: {axis: {repaired_graph: ...}}
    return {ax: AxisGraph.from_dict(v["repaired_graph"] if "repaired_graph" in v else v)
            for ax, v in data.items()}


def cmd_align(args) -> None:
    if args.graph:
        graphs = _read_graph(args.graph)
    elif args.assertions:
        _, g, _ = _load_graphs(args)
        graphs = {ax.value: x for ax, x in g.items()}
    else:
        raise UsageError("align needs --graph or --assertions")
    traces = {}
    for ax, g in graphs.items():
        if args.order:
            tau = json.loads(Path(args.order).read_text(encoding="utf-8"))
            if isinstance(tau, dict):
                tau = tau[ax]
        elif args.dataset:
            tau = datagen.true_order(_dataset(args.dataset, args.seed), ax)
        else:
            raise UsageError("align needs --order or --dataset for the true order")
        traces[ax] = align_mod.align(g, tau)
    if args.csv:
        align_mod.write_alignment_csv(args.csv, traces)
    _dump({ax: t.to_dict() for ax, t in traces.items()}, args.out)


def cmd_noise_sweep(args) -> None:
    if args.order:
        order = json.loads(Path(args.order).read_text(encoding="utf-8"))
    else:
        order = [f"Object_{k}" for k in range(args.n)]
    points = ebmfix.noise_sweep(order, _ratios(args.ratios), args.trials, args.seed,
                                eta=args.eta, max_iters=args.max_iters, tol=args.tol)
    rows = [[p.ratio, repr(p.mean_error)] for p in points]
    if args.out in (None, "-"):
        sys.stdout.write("ratio,mean_error\n" + "".join(f"{a},{b}\n" for a, b in rows))
    else:
        reportviz.write_xy_csv(args.out, ["ratio", "mean_error"], rows)
    if args.svg:
        Path(args.svg).write_text(_noise_svg([(p.ratio, p.mean_error) for p in points]), encoding="utf-8")


def _noise_svg(points) -> str:
    return reportviz.line_chart_svg({"EBM": points}, title="Recovered-order error vs. reversal ratio",
                                    x_label="reversed edge ratio", y_label="error rate")


def cmd_noise_plot(args) -> None:
    Path(args.out).write_text(_noise_svg(reportviz.read_xy_csv(args.csv)), encoding="utf-8")


def cmd_reconstruct_map(args) -> None:
    args.axis = None
    domain, graphs, ds = _load_graphs(args)
    if domain is not Domain.SPATIAL:
        raise DomainMismatchError("reconstruct-map needs spatial assertions")
    orders = {}
    for ax, g in graphs.items():
        _, orders[ax] = ordergraph.fix_to_simply_ordered(g, ordergraph.RepairMode.REVERSE)
    pts = reportviz.reconstruct_map(orders[Axis.X], orders[Axis.Y])
    reportviz.write_map_csv(args.out, pts)
    if args.svg:
        Path(args.svg).write_text(reportviz.map_svg(pts, args.title or "reconstructed map"), encoding="utf-8")
    if ds is not None and ds.ground_truth is not None:
        from .relmodel import NodeOrdering

        ref = reportviz.reconstruct_map(NodeOrdering.from_sequence(datagen.true_order(ds, "x")),
                                        NodeOrdering.from_sequence(datagen.true_order(ds, "y")))
        sys.stdout.write(json.dumps(reportviz.compare_maps(pts, ref), sort_keys=True) + "\n")


def cmd_validate_correlation(args) -> None:
    if args.assertions:
        graphs, labels = [], []
        for path in args.assertions:
            a = read_assertions(path)
            if not a:
                raise ValueError(f"{path} holds no assertions")
            for ax in _axes(a[0].domain, args.axis):
                graphs.append(build_axis_graph(a, ax))
                labels.append(f"{path}:{ax.value}")
    else:
        ratios = _ratios(args.ratios)
        graphs = validation.synthetic_noise_graphs(args.n, ratios, args.seed)
        labels = [f"ratio={r}" for r in ratios]
    rep = validation.validate_correlation(graphs, labels, seed=args.seed, eta=args.eta,
                                          max_iters=args.max_iters, tol=args.tol)
    _dump(rep.to_dict(), args.out)


# --- parser ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="relcheck", description="Self-consistency checks for pairwise relation answers.")
    p.add_argument("--seed", type=int, default=0, help="seed for every stochastic stage")
    p.add_argument("-v", "--verbose", action="store_true")
    # --seed is accepted before or after the subcommand
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    _add = sub.add_parser

    def add_parser(name, **kw):
        return _add(name, parents=[common], **kw)

    sub.add_parser = add_parser  # type: ignore[method-assign]

    def ebm_flags(sp):
        sp.add_argument("--eta", type=float, default=ebmfix.DEFAULT_ETA)
        sp.add_argument("--max-iters", type=int, default=ebmfix.DEFAULT_MAX_ITERS)
        sp.add_argument("--tol", type=float, default=ebmfix.DEFAULT_TOL)

    axis_choices = [a.value for a in Axis]

    sp = sub.add_parser("gen-data", help="write a dataset file")
    sp.add_argument("--dataset", required=True, choices=list(datagen.DATASET_SIZES))
    sp.add_argument("--random-tree", action="store_true", help="kinship: random tree from --seed")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_gen_data)

    sp = sub.add_parser("gen-prompts", help="render one prompt per ordered pair")
    sp.add_argument("--dataset", required=True, help="dataset name or file")
    sp.add_argument("--template", choices=[t.value for t in promptparse.TemplateId])
    sp.add_argument("--context", default="none", choices=["none", "full", *[r.value for r in datagen.Regime]])
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_gen_prompts)

    sp = sub.add_parser("query", help="collect model responses (network unless cached)")
    sp.add_argument("--prompts", required=True)
    sp.add_argument("--config")
    sp.add_argument("--model")
    sp.add_argument("--cache", default=".relcheck-cache")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_query)

    sp = sub.add_parser("parse", help="turn responses into assertions")
    sp.add_argument("--prompts", required=True)
    sp.add_argument("--responses", required=True)
    sp.add_argument("--stats")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_parse)

    sp = sub.add_parser("score", help="inconsistency score of an assertion file")
    sp.add_argument("--assertions", required=True)
    sp.add_argument("--dataset")
    sp.add_argument("--axis", choices=axis_choices)
    sp.add_argument("--context", default="none", choices=["none", "full", *[r.value for r in datagen.Regime]])
    sp.add_argument("--reference", default="graph", choices=["graph", "ebm"])
    sp.add_argument("--denominator", type=int)
    ebm_flags(sp)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_score)

    sp = sub.add_parser("fix-graph", help="node ordering, reverse edges, repaired graph")
    sp.add_argument("--assertions", required=True)
    sp.add_argument("--dataset")
    sp.add_argument("--axis", choices=axis_choices)
    sp.add_argument("--mode", default="reverse", choices=["remove", "reverse"])
    sp.add_argument("--dot", help="write the SCC condensation as DOT")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_fix_graph)

    sp = sub.add_parser("fix-ebm", help="energy-based ordering")
    sp.add_argument("--assertions", required=True)
    sp.add_argument("--dataset")
    sp.add_argument("--axis", choices=axis_choices)
    ebm_flags(sp)
    sp.add_argument("--patience", type=int, default=ebmfix.PATIENCE,
                    help="stall steps before stopping; 0 runs until E = 0 or --max-iters")
    sp.add_argument("--trace-csv")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_fix_ebm)

    sp = sub.add_parser("kinship-closure", help="derive every relation from seed facts")
    sp.add_argument("--seeds", help="text file, one seed sentence per line")
    sp.add_argument("--dataset", help="kinship dataset name or file")
    sp.add_argument("--answers", help="assertion file to check against the closure")
    sp.add_argument("--denominator", type=int)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_kinship_closure)

    sp = sub.add_parser("align", help="align a graph with the true order")
    sp.add_argument("--graph", help="graph JSON or fix-graph output")
    sp.add_argument("--assertions")
    sp.add_argument("--order", help="JSON list (or {axis: list}) giving the true order")
    sp.add_argument("--dataset")
    sp.add_argument("--axis", choices=axis_choices)
    sp.add_argument("--csv")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_align)

    sp = sub.add_parser("noise-sweep", help="EBM recovery error versus reversal ratio")
    sp.add_argument("--order", help="JSON list with the true order")
    sp.add_argument("--n", type=int, default=51)
    sp.add_argument("--ratios", default="0,0.05,0.1,0.15,0.2,0.25,0.3")
    sp.add_argument("--trials", type=int, default=20)
    ebm_flags(sp)
    sp.add_argument("--svg")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_noise_sweep)

    sp = sub.add_parser("noise-plot", help="SVG chart from a noise-sweep CSV")
    sp.add_argument("--csv", required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_noise_plot)

    sp = sub.add_parser("reconstruct-map", help="rank-grid map from spatial assertions")
    sp.add_argument("--assertions", required=True)
    sp.add_argument("--dataset")
    sp.add_argument("--svg")
    sp.add_argument("--title")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_reconstruct_map)

    sp = sub.add_parser("validate-correlation", help="graph vs EBM score correlation")
    sp.add_argument("--assertions", nargs="*")
    sp.add_argument("--axis", choices=axis_choices)
    sp.add_argument("--n", type=int, default=20)
    sp.add_argument("--ratios", default="0.02,0.04,0.06,0.08,0.1,0.12,0.14,0.16,0.18,0.2")
    ebm_flags(sp)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_validate_correlation)
    return p


DATA_ERRORS = (
    ValueError, KeyError, LookupError, OSError, json.JSONDecodeError, ContextError,
    kinship.InconsistentSeeds, llmclient.MissingCredentialError, datagen.GenerationError,
)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"relcheck: usage error: {exc}\n")
        return EXIT_USAGE
    except DATA_ERRORS as exc:
        sys.stderr.write(f"relcheck: {type(exc).__name__}: {exc}\n")
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
