"""Session-aware recommendation by spreading activation over the trail graph.

Seed mass comes from the live session's history (recency-decayed, weighted by
accumulated interaction). Activation propagates along out-edges for a bounded
number of steps; each step multiplies by ``damping * weight / out_weight``.
Zero-weight structural steps block propagation for document recommendation,
but are traversable with a degree-normalized factor when recommending
queries, so reformulation chains stay connected.

Per-session exclusions: a session is never recommended a document it already
touched, marked not-relevant, or was shown before.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .events import ActionEvent, ActionType, WeightTable, action_weight
from .graph import NodeKind, TrailGraph, document_node_id, query_node_id


class RecommendError(ValueError):
    pass


class PathGuardError(RuntimeError):
    """The exhaustive path oracle was asked to enumerate too many paths."""


@dataclass(frozen=True)
class RecParams:
    depth: int = 3
    damping: float = 0.6
    recency_decay: float = 0.8
    k: int = 10

    def __post_init__(self) -> None:
        if self.depth < 1:
            raise ValueError("depth must be >= 1")
        if not 0 < self.damping <= 1:
            raise ValueError("damping must be in (0, 1]")
        if not 0 < self.recency_decay <= 1:
            raise ValueError("recency_decay must be in (0, 1]")
        if self.k < 1:
            raise ValueError("k must be >= 1")


@dataclass(frozen=True)
class Recommendation:
    node_id: str
    kind: NodeKind
    score: float

    def __post_init__(self) -> None:
        if not (self.score > 0 and math.isfinite(self.score)):
            raise ValueError(f"score must be positive and finite, got {self.score!r}")


@dataclass
class SessionState:
    """The live session's interaction history and exclusion bookkeeping.

    ``history`` is ordered oldest to most recently touched; each node appears
    once with its accumulated action weight. ``shown_order`` retains every
    recommendation ever presented, in presentation order, so past
    recommendations stay retrievable.
    """

    session_id: str
    history: list[tuple[str, float]] = field(default_factory=list)
    issued_queries: set[str] = field(default_factory=set)
    shown_recommendations: set[str] = field(default_factory=set)
    not_relevant: set[str] = field(default_factory=set)
    shown_order: list[str] = field(default_factory=list)

    def history_nodes(self) -> set[str]:
        return {node_id for node_id, _ in self.history}

    def _touch(self, node_id: str, weight: float) -> None:
        for i, (existing, acc) in enumerate(self.history):
            if existing == node_id:
                del self.history[i]
                self.history.append((node_id, acc + weight))
                return
        self.history.append((node_id, weight))


def update_state(state: SessionState, event: ActionEvent, table: WeightTable) -> SessionState:
    """Fold one event into the session state (mutates and returns ``state``)."""
    if event.session_id != state.session_id:
        raise RecommendError(
            f"event {event.event_id} belongs to session {event.session_id!r}, "
            f"not {state.session_id!r}"
        )
    if event.action is ActionType.QUERY:
        node_id = query_node_id(event.target)
        state.issued_queries.add(node_id)
        state._touch(node_id, 0.0)
        return state

    node_id = document_node_id(event.target)
    if event.action is ActionType.MARK_NOT_RELEVANT:
        state.not_relevant.add(node_id)
    weight = action_weight(event.action, event.duration_ms, table)
    if weight == 0.0 and event.action is ActionType.PLAY:
        return state  # sub-threshold plays never enter the history
    state._touch(node_id, weight)
    return state


def seed_weights(state: SessionState, recency_decay: float) -> dict[str, float]:
    """Recency-decayed seed mass per history node, normalized to sum to 1.

    Each entry contributes ``decay^i * (1 + accumulated_weight)`` where i
    counts back from the most recent entry. The +1 keeps zero-weight nodes
    (freshly issued queries) as live seeds.
    """
    raw: dict[str, float] = {}
    for i, (node_id, weight) in enumerate(reversed(state.history)):
        raw[node_id] = raw.get(node_id, 0.0) + (recency_decay**i) * (1.0 + weight)
    total = sum(raw.values())
    if total <= 0:
        return {}
    return {node_id: mass / total for node_id, mass in raw.items()}


def _propagate(
    graph: TrailGraph,
    seeds: Mapping[str, float],
    params: RecParams,
    traverse_zero_edges: bool,
) -> dict[str, float]:
    for node_id, mass in seeds.items():
        if mass < 0:
            raise RecommendError(f"negative seed weight for {node_id!r}")
    frontier = {node_id: mass for node_id, mass in seeds.items() if mass > 0}
    scores: dict[str, float] = defaultdict(float)
    for _ in range(params.depth):
        if not frontier:
            break
        nxt: dict[str, float] = defaultdict(float)
        for node_id, mass in frontier.items():
            edges = graph.out_edges(node_id)
            if not edges:
                continue
            total_out = sum(e.weight for e in edges)
            for edge in edges:
                if edge.weight > 0:
                    factor = params.damping * edge.weight / total_out
                elif traverse_zero_edges:
                    factor = params.damping / len(edges)
                else:
                    continue
                nxt[edge.dst] += mass * factor
        for node_id, gained in nxt.items():
            scores[node_id] += gained
        frontier = nxt
    for node_id in seeds:
        scores.pop(node_id, None)
    return {node_id: score for node_id, score in scores.items() if score > 0}


def activate(graph: TrailGraph, seeds: Mapping[str, float], params: RecParams) -> dict[str, float]:
    """Bounded spreading activation from the seed set.

    score(n) sums, over every directed path of length 1..depth from a seed s
    to n, the product seed(s) * prod(damping * w(u,v) / out_weight(u)).
    Zero-weight edges terminate propagation; seeds are excluded from the
    result.
    """
    return _propagate(graph, seeds, params, traverse_zero_edges=False)


def oracle_path_scores(
    graph: TrailGraph,
    seeds: Mapping[str, float],
    params: RecParams,
    max_paths: int = 1000,
) -> dict[str, float]:
    """Literal enumeration of every path up to ``depth``; test oracle for activate.

    Intentionally an independent implementation: depth-first walk extension
    rather than frontier propagation. Guards against explosion by refusing to
    enumerate more than ``max_paths`` paths.
    """
    scores: dict[str, float] = defaultdict(float)
    enumerated = 0

    def extend(node_id: str, mass: float, steps_left: int) -> None:
        nonlocal enumerated
        if steps_left == 0:
            return
        edges = graph.out_edges(node_id)
        total_out = sum(e.weight for e in edges)
        for edge in edges:
            if edge.weight <= 0:
                continue
            enumerated += 1
            if enumerated > max_paths:
                raise PathGuardError(f"more than {max_paths} paths")
            contribution = mass * params.damping * edge.weight / total_out
            scores[edge.dst] += contribution
            extend(edge.dst, contribution, steps_left - 1)

    for node_id, mass in seeds.items():
        if mass > 0:
            extend(node_id, mass, params.depth)
    for node_id in seeds:
        scores.pop(node_id, None)
    return {node_id: score for node_id, score in scores.items() if score > 0}


def _ranked(
    scores: Mapping[str, float],
    graph: TrailGraph,
    wanted: NodeKind,
    excluded: set[str],
    k: int,
) -> list[Recommendation]:
    candidates = [
        (node_id, score)
        for node_id, score in scores.items()
        if graph.kind(node_id) is wanted and node_id not in excluded
    ]
    candidates.sort(key=lambda item: (-item[1], item[0]))
    return [Recommendation(node_id, wanted, score) for node_id, score in candidates[:k]]


def recommend_documents(
    graph: TrailGraph, state: SessionState, params: RecParams
) -> list[Recommendation]:
    """Top-k document nodes by activation, honoring session exclusions.

    Never returns a node from the session's history, its not-relevant set, or
    anything previously shown; callers record the returned ids via
    :func:`mark_shown` to enforce the once-only rule.
    """
    seeds = seed_weights(state, params.recency_decay)
    scores = activate(graph, seeds, params)
    excluded = state.history_nodes() | state.not_relevant | state.shown_recommendations
    return _ranked(scores, graph, NodeKind.DOCUMENT, excluded, params.k)


def recommend_queries(
    graph: TrailGraph, state: SessionState, params: RecParams
) -> list[Recommendation]:
    """Top-k query nodes by activation; never suggests an already-issued query."""
    seeds = seed_weights(state, params.recency_decay)
    scores = _propagate(graph, seeds, params, traverse_zero_edges=True)
    return _ranked(scores, graph, NodeKind.QUERY, set(state.issued_queries), params.k)


def mark_shown(state: SessionState, recommendations: Iterable[Recommendation]) -> SessionState:
    """Record presented recommendations (mutates and returns ``state``)."""
    for rec in recommendations:
        state.shown_recommendations.add(rec.node_id)
        state.shown_order.append(rec.node_id)
    return state
