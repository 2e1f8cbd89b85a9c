"""Command-line entry points: ingestion, serving, simulation, evaluation.

Every subcommand is a thin shell over the library modules. Data
directories hold ``events.log`` (append-only source of truth),
``shown.log`` (presented recommendations), and ``graph.snapshot``.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from .evaluation import (
    build_metrics_report,
    curve_spearman,
    parse_runs,
    read_qrels,
    relevance_probability_curve,
    qrels_union,
)
from .events import (
    LogFormatError,
    WeightTable,
    parse_event_log,
    serialize_event_log,
    sessionize,
)
from .graph import TrailGraph, add_session, read_snapshot, write_snapshot
from .recommend import RecParams, SessionState, recommend_documents, recommend_queries, update_state
from .retrieval import serialize_corpus
from .service import ServiceConfig, serve
from .simulate import (
    SimConfig,
    action_mix,
    config_from_dict,
    config_to_dict,
    run_experiment,
    unique_query_fraction,
)
from .toydata import build_toy_collection


class CliError(Exception):
    pass


def _load_table(weights_path: str | None) -> WeightTable:
    return WeightTable.from_file(weights_path) if weights_path else WeightTable.default()


def _read_log(path: Path):
    if not path.exists():
        raise CliError(f"no event log at {path}")
    try:
        return parse_event_log(path.read_bytes())
    except LogFormatError as exc:
        raise CliError(f"{path}: {exc}") from exc


def _rebuild_graph(data_dir: Path, table: WeightTable) -> TrailGraph:
    graph = TrailGraph()
    log_path = data_dir / "events.log"
    if log_path.exists():
        for session in sessionize(parse_event_log(log_path.read_bytes())):
            add_session(graph, session, table)
    return graph


def _cmd_ingest(args: argparse.Namespace) -> int:
    data_dir = Path(args.data)
    data_dir.mkdir(parents=True, exist_ok=True)
    table = _load_table(args.weights)
    new_events = _read_log(Path(args.log))
    log_path = data_dir / "events.log"
    existing_ids = {e.event_id for e in _read_log(log_path)} if log_path.exists() else set()
    dupes = [e.event_id for e in new_events if e.event_id in existing_ids]
    if dupes:
        raise CliError(f"event ids already ingested: {', '.join(dupes[:5])}")
    with log_path.open("ab") as fh:
        fh.write(serialize_event_log(new_events))
    graph = _rebuild_graph(data_dir, table)
    write_snapshot(graph, data_dir / "graph.snapshot")
    stats = graph.stats()
    print(f"ingested {len(new_events)} events")
    print(f"node_count {stats.node_count}")
    print(f"edge_count {stats.edge_count}")
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    config = ServiceConfig.from_file(args.config)
    serve(config)
    return 0


def _load_graph(data_dir: Path, table: WeightTable) -> TrailGraph:
    if not data_dir.is_dir():
        raise CliError(f"no data directory at {data_dir}")
    snapshot_path = data_dir / "graph.snapshot"
    if snapshot_path.exists():
        return read_snapshot(snapshot_path)
    return _rebuild_graph(data_dir, table)


def _cmd_recommend(args: argparse.Namespace) -> int:
    data_dir = Path(args.data)
    table = _load_table(args.weights)
    events = _read_log(data_dir / "events.log")
    graph = _load_graph(data_dir, table)
    state = SessionState(session_id=args.session)
    found = False
    for event in events:
        if event.session_id == args.session:
            update_state(state, event, table)
            found = True
    if not found:
        print(f"session {args.session!r} has no events; nothing to recommend", file=sys.stderr)
    params = RecParams(k=args.k)
    print("documents:")
    for rec in recommend_documents(graph, state, params):
        print(f"  {rec.node_id}\t{rec.score:.6f}")
    print("queries:")
    for rec in recommend_queries(graph, state, params):
        print(f"  {rec.node_id}\t{rec.score:.6f}")
    return 0


def _curve_lines(graph: TrailGraph, relevant: set[str]) -> list[str]:
    bins = relevance_probability_curve(graph, relevant)
    lines = ["lo\thi\tn_docs\tp_relevant"]
    for b in bins:
        hi = "inf" if math.isinf(b.hi) else f"{b.hi:g}"
        lines.append(f"{b.lo:g}\t{hi}\t{b.n_docs}\t{b.p_relevant:.6f}")
    try:
        rho = curve_spearman(bins)
        lines.append(f"spearman {rho:.4f}")
    except ValueError:
        lines.append("spearman n/a")
    return lines


def _cmd_simulate(args: argparse.Namespace) -> int:
    raw = {}
    if args.config:
        try:
            raw = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise CliError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(raw, dict):
            raise CliError("simulation config must be a JSON object")
    raw.setdefault("rng_seed", 7)
    collection = build_toy_collection(seed=raw["rng_seed"])
    config = config_from_dict(raw, default_tasks=collection.tasks)
    outcome = run_experiment(collection.corpus, collection.qrels, config)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "corpus.jsonl").write_bytes(serialize_corpus(collection.corpus))
    from .evaluation import serialize_qrels, serialize_runs

    (out_dir / "qrels.txt").write_bytes(serialize_qrels(collection.qrels))
    events = [e for s in outcome.sessions for e in s.events]
    (out_dir / "events.log").write_bytes(serialize_event_log(events))
    write_snapshot(outcome.graph, out_dir / "graph.snapshot")
    (out_dir / "runs.jsonl").write_bytes(serialize_runs(outcome.runs))
    (out_dir / "config.json").write_text(
        json.dumps(config_to_dict(config), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    relevant = qrels_union(collection.qrels)
    curve = relevance_probability_curve(outcome.graph, relevant)
    metrics = {
        "selected": outcome.metrics.to_dict(),
        "system": outcome.metrics_system.to_dict(),
        "action_mix": {a.value: p for a, p in sorted(action_mix(outcome.sessions).items(), key=lambda i: i[0].value)},
        "unique_query_fraction": unique_query_fraction(outcome.sessions),
        "curve": [
            {"lo": b.lo, "hi": ("inf" if math.isinf(b.hi) else b.hi),
             "n_docs": b.n_docs, "p_relevant": b.p_relevant}
            for b in curve
        ],
    }
    try:
        metrics["curve_spearman"] = curve_spearman(curve)
    except ValueError:
        metrics["curve_spearman"] = None
    (out_dir / "metrics.json").write_text(
        json.dumps(metrics, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    (out_dir / "curve.tsv").write_text(
        "\n".join(_curve_lines(outcome.graph, relevant)) + "\n", encoding="utf-8"
    )
    print(f"simulated {len(outcome.sessions)} sessions, {len(events)} events -> {out_dir}")
    return 0


def _cmd_evaluate(args: argparse.Namespace) -> int:
    qrels = read_qrels(args.qrels)
    runs_dir = Path(args.runs)
    runs_path = runs_dir / "runs.jsonl"
    if not runs_path.exists():
        raise CliError(f"no runs.jsonl in {runs_dir}")
    runs = parse_runs(runs_path.read_bytes())
    sessions = {}
    log_path = runs_dir / "events.log"
    if log_path.exists():
        for session in sessionize(parse_event_log(log_path.read_bytes())):
            sessions[session.session_id] = session
    for kind in ("selected", "system"):
        subset = [r for r in runs if r.ranking_kind == kind]
        if not subset:
            continue
        report = build_metrics_report(subset, sessions, qrels)
        print(f"== {kind} rankings ==")
        print(report.to_table())
        print()
    snapshot_path = runs_dir / "graph.snapshot"
    if snapshot_path.exists():
        graph = read_snapshot(snapshot_path)
        for line in _curve_lines(graph, qrels_union(qrels)):
            print(line)
    return 0


def _cmd_stats(args: argparse.Namespace) -> int:
    data_dir = Path(args.data)
    graph = _load_graph(data_dir, _load_table(args.weights))
    stats = graph.stats()
    print(f"node_count {stats.node_count}")
    print(f"query_node_count {stats.query_node_count}")
    print(f"document_node_count {stats.document_node_count}")
    print(f"edge_count {stats.edge_count}")
    print(f"total_weight {stats.total_weight:g}")
    return 0


def _cmd_snapshot(args: argparse.Namespace) -> int:
    data_dir = Path(args.data)
    table = _load_table(args.weights)
    graph = _rebuild_graph(data_dir, table)
    path = data_dir / "graph.snapshot"
    write_snapshot(graph, path)
    stats = graph.stats()
    print(f"wrote {path} ({stats.node_count} nodes, {stats.edge_count} edges)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trailmine",
        description="Search-trail mining: graph construction, recommendations, simulation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="append an event log into a data directory")
    p.add_argument("--log", required=True, help="JSONL event log to ingest")
    p.add_argument("--data", required=True, help="data directory")
    p.add_argument("--weights", help="weight table JSON")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--config", required=True, help="service config JSON")
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser("recommend", help="print recommendations for a session")
    p.add_argument("--data", required=True)
    p.add_argument("--session", required=True)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--weights", help="weight table JSON")
    p.set_defaults(func=_cmd_recommend)

    p = sub.add_parser("simulate", help="run a seeded multi-user experiment")
    p.add_argument("--config", help="simulation config JSON (defaults applied)")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("evaluate", help="score runs against qrels")
    p.add_argument("--qrels", required=True)
    p.add_argument("--runs", required=True, help="directory with runs.jsonl (and optional events.log, graph.snapshot)")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("stats", help="print graph statistics")
    p.add_argument("--data", required=True)
    p.add_argument("--weights", help="weight table JSON")
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("snapshot", help="rebuild the graph snapshot from the event log")
    p.add_argument("--data", required=True)
    p.add_argument("--weights", help="weight table JSON")
    p.set_defaults(func=_cmd_snapshot)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CliError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
