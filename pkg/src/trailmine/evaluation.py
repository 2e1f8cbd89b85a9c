"""Retrieval metrics: P@N, average precision / MAP, time to first relevant
shot, and the relevance-probability-vs-interaction-value curve.

Average precision uses the standard denominator: the total number of
relevant shots in the ground truth for the task.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .events import ActionType, Session
from .graph import DOCUMENT_PREFIX, NodeKind, TrailGraph


class EvaluationError(ValueError):
    pass


Qrels = dict[str, set[str]]

# Left bin edges for the interaction-value curve; the last bin is open-ended.
DEFAULT_BIN_EDGES = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 7.0, 10.0, 15.0]

DEFAULT_PRECISION_CUTOFFS = (5, 10, 20, 30)


def load_qrels(data: bytes | str) -> Qrels:
    """Parse whitespace-separated qrels lines: ``task_id 0 shot_id rel``."""
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    qrels: Qrels = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 4:
            raise EvaluationError(f"line {lineno}: expected 4 fields, got {len(parts)}")
        task_id, _unused, shot_id, rel = parts
        if rel not in ("0", "1"):
            raise EvaluationError(f"line {lineno}: relevance must be 0 or 1, got {rel!r}")
        if rel == "1":
            qrels.setdefault(task_id, set()).add(shot_id)
    return qrels


def serialize_qrels(qrels: Qrels) -> bytes:
    lines = []
    for task_id in sorted(qrels):
        for shot_id in sorted(qrels[task_id]):
            lines.append(f"{task_id} 0 {shot_id} 1")
    return ("\n".join(lines) + "\n").encode("utf-8") if lines else b""


def read_qrels(path: str | Path) -> Qrels:
    return load_qrels(Path(path).read_bytes())


def qrels_union(qrels: Qrels) -> set[str]:
    union: set[str] = set()
    for relevant in qrels.values():
        union |= relevant
    return union


def _dedupe(ranked: Sequence[str]) -> list[str]:
    seen: set[str] = set()
    out: list[str] = []
    for shot_id in ranked:
        if shot_id not in seen:
            seen.add(shot_id)
            out.append(shot_id)
    return out


def precision_at_n(ranked: Sequence[str], relevant: set[str], n: int) -> float:
    """|relevant ∩ top-min(n, len)| / n."""
    if n < 1:
        raise EvaluationError("n must be >= 1")
    top = _dedupe(ranked)[:n]
    return sum(1 for shot_id in top if shot_id in relevant) / n


def average_precision(ranked: Sequence[str], relevant: set[str]) -> float:
    """Mean of P@r over the ranks r of relevant items, over |relevant|."""
    if not relevant:
        raise EvaluationError("relevant set must be non-empty")
    hits = 0
    total = 0.0
    for rank, shot_id in enumerate(_dedupe(ranked), start=1):
        if shot_id in relevant:
            hits += 1
            total += hits / rank
    return total / len(relevant)


def mean_average_precision(runs: Iterable[tuple[Sequence[str], set[str]]]) -> float:
    aps = [average_precision(ranked, relevant) for ranked, relevant in runs]
    if not aps:
        raise EvaluationError("no runs to average")
    return sum(aps) / len(aps)


def time_to_first_relevant(session: Session, relevant: set[str]) -> float | None:
    """Seconds from the session's first event to its first correct MarkRelevant.

    Returns None when the session never marks a truly relevant shot.
    """
    if not session.events:
        return None
    start_ms = session.events[0].timestamp_ms
    for event in session.events:
        if event.action is ActionType.MARK_RELEVANT and event.target in relevant:
            return (event.timestamp_ms - start_ms) / 1000.0
    return None


@dataclass(frozen=True)
class CurveBin:
    lo: float
    hi: float  # math.inf for the terminal bin
    n_docs: int
    p_relevant: float


def relevance_probability_curve(
    graph: TrailGraph,
    relevant_union: set[str],
    bin_edges: Sequence[float] = DEFAULT_BIN_EDGES,
) -> list[CurveBin]:
    """Bin every document node by interaction value; report P(relevant) per bin.

    ``bin_edges`` are the left edges of consecutive bins; the final bin is
    open-ended. Values below the first edge are clamped into the first bin so
    the bins always partition the document node set. Empty bins report
    n_docs = 0 and p_relevant = 0.
    """
    edges = list(bin_edges)
    if not edges:
        raise EvaluationError("bin_edges must be non-empty")
    if any(b <= a for a, b in zip(edges, edges[1:])):
        raise EvaluationError("bin_edges must be strictly increasing")
    totals = [0] * len(edges)
    hits = [0] * len(edges)
    for node_id in graph.node_ids():
        if graph.kind(node_id) is not NodeKind.DOCUMENT:
            continue
        value = graph.interaction_value(node_id)
        idx = 0
        for i, edge in enumerate(edges):
            if value >= edge:
                idx = i
            else:
                break
        totals[idx] += 1
        if node_id[len(DOCUMENT_PREFIX):] in relevant_union:
            hits[idx] += 1
    bins = []
    for i, lo in enumerate(edges):
        hi = edges[i + 1] if i + 1 < len(edges) else math.inf
        n = totals[i]
        bins.append(CurveBin(lo, hi, n, hits[i] / n if n else 0.0))
    return bins


def curve_spearman(bins: Sequence[CurveBin]) -> float:
    """Spearman rank correlation between bin index and p_relevant, non-empty bins only."""
    from scipy.stats import spearmanr

    occupied = [(i, b.p_relevant) for i, b in enumerate(bins) if b.n_docs > 0]
    if len(occupied) < 2:
        raise EvaluationError("need at least two non-empty bins")
    indexes = [i for i, _ in occupied]
    probs = [p for _, p in occupied]
    rho = spearmanr(indexes, probs).statistic
    return float(rho)


@dataclass(frozen=True)
class RunRecord:
    """One session's ranked output for a task under one condition.

    ``ranking_kind`` labels how the ranking was obtained: "selected" for the
    shots the user marked relevant (in mark order) or "system" for the shots
    the system surfaced (in presentation order).
    """

    session_id: str
    task_id: str
    condition: str
    ranking_kind: str
    ranked: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "task_id": self.task_id,
            "condition": self.condition,
            "ranking_kind": self.ranking_kind,
            "ranked": list(self.ranked),
        }


def parse_runs(data: bytes | str) -> list[RunRecord]:
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    runs = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            raw = json.loads(line)
            runs.append(
                RunRecord(
                    session_id=raw["session_id"],
                    task_id=raw["task_id"],
                    condition=raw["condition"],
                    ranking_kind=raw["ranking_kind"],
                    ranked=tuple(raw["ranked"]),
                )
            )
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise EvaluationError(f"line {lineno}: malformed run record: {exc}") from exc
    return runs


def serialize_runs(runs: Iterable[RunRecord]) -> bytes:
    lines = (json.dumps(r.to_dict(), separators=(",", ":")) for r in runs)
    return "".join(line + "\n" for line in lines).encode("utf-8")


@dataclass
class TaskMetrics:
    p_at_n: dict[int, float]
    map_score: float
    time_to_first_relevant_s: float | None
    n_runs: int

    def __post_init__(self) -> None:
        for n, p in self.p_at_n.items():
            if not 0.0 <= p <= 1.0:
                raise EvaluationError(f"P@{n} out of range: {p}")
        if not 0.0 <= self.map_score <= 1.0:
            raise EvaluationError(f"MAP out of range: {self.map_score}")
        t = self.time_to_first_relevant_s
        if t is not None and t < 0:
            raise EvaluationError("time_to_first_relevant_s must be >= 0")


@dataclass
class MetricsReport:
    """Per-condition, per-task metrics with aggregate helpers."""

    by_condition: dict[str, dict[str, TaskMetrics]] = field(default_factory=dict)

    def conditions(self) -> list[str]:
        return sorted(self.by_condition)

    def mean_p_at_n(self, condition: str, n: int) -> float:
        tasks = self.by_condition.get(condition, {})
        values = [m.p_at_n[n] for m in tasks.values() if n in m.p_at_n]
        if not values:
            raise EvaluationError(f"no P@{n} values for condition {condition!r}")
        return sum(values) / len(values)

    def mean_map(self, condition: str) -> float:
        tasks = self.by_condition.get(condition, {})
        values = [m.map_score for m in tasks.values()]
        if not values:
            raise EvaluationError(f"no MAP values for condition {condition!r}")
        return sum(values) / len(values)

    def to_dict(self) -> dict:
        return {
            cond: {
                task: {
                    "p_at_n": {str(n): p for n, p in sorted(m.p_at_n.items())},
                    "map": m.map_score,
                    "time_to_first_relevant_s": m.time_to_first_relevant_s,
                    "n_runs": m.n_runs,
                }
                for task, m in sorted(tasks.items())
            }
            for cond, tasks in sorted(self.by_condition.items())
        }

    def to_table(self) -> str:
        """Flat text table, one row per (condition, task)."""
        cutoffs = sorted(
            {
                n
                for tasks in self.by_condition.values()
                for m in tasks.values()
                for n in m.p_at_n
            }
        )
        header = ["condition", "task", "runs"] + [f"P@{n}" for n in cutoffs] + ["MAP", "TTFR_s"]
        rows = [header]
        for cond in sorted(self.by_condition):
            for task in sorted(self.by_condition[cond]):
                m = self.by_condition[cond][task]
                row = [cond, task, str(m.n_runs)]
                row += [f"{m.p_at_n[n]:.4f}" if n in m.p_at_n else "-" for n in cutoffs]
                row.append(f"{m.map_score:.4f}")
                row.append(f"{m.time_to_first_relevant_s:.1f}" if m.time_to_first_relevant_s is not None else "-")
                rows.append(row)
        widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
        return "\n".join(
            "  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)) for row in rows
        )


def build_metrics_report(
    runs: Sequence[RunRecord],
    sessions: Mapping[str, Session],
    qrels: Qrels,
    cutoffs: Sequence[int] = DEFAULT_PRECISION_CUTOFFS,
) -> MetricsReport:
    """Aggregate run rankings into per-condition, per-task means.

    P@N and AP are averaged over a (condition, task)'s runs;
    time-to-first-relevant averages over the sessions that found one.
    """
    grouped: dict[tuple[str, str], list[RunRecord]] = {}
    for run in runs:
        if run.task_id not in qrels or not qrels[run.task_id]:
            raise EvaluationError(f"no relevance judgments for task {run.task_id!r}")
        grouped.setdefault((run.condition, run.task_id), []).append(run)

    report = MetricsReport()
    for (condition, task_id), task_runs in sorted(grouped.items()):
        relevant = qrels[task_id]
        p_at_n = {
            n: sum(precision_at_n(r.ranked, relevant, n) for r in task_runs) / len(task_runs)
            for n in cutoffs
        }
        map_score = mean_average_precision((r.ranked, relevant) for r in task_runs)
        times = []
        for run in task_runs:
            session = sessions.get(run.session_id)
            if session is None:
                continue
            t = time_to_first_relevant(session, relevant)
            if t is not None:
                times.append(t)
        ttfr = sum(times) / len(times) if times else None
        report.by_condition.setdefault(condition, {})[task_id] = TaskMetrics(
            p_at_n=p_at_n,
            map_score=map_score,
            time_to_first_relevant_s=ttfr,
            n_runs=len(task_runs),
        )
    return report
