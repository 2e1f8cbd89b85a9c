"""Aggregated weighted directed graph over query and document nodes.

Nodes are namespaced by kind (``q:`` for normalized query text, ``d:`` for
shot ids) so the two id spaces can never collide. Edges are trail steps:
earlier node -> later node, with accumulated weight and a count of
contributing actions. A node's interaction value is the sum of the weights
on its incoming edges.

Concurrency contract: all mutation goes through one writer; readers work on
frozen copies (see :meth:`TrailGraph.copy`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator

from .events import ActionType, Session, WeightTable, action_weight


class GraphError(ValueError):
    pass


class SnapshotError(ValueError):
    """A snapshot payload is corrupt or has an unsupported version."""


class NodeKind(Enum):
    QUERY = "query"
    DOCUMENT = "document"


QUERY_PREFIX = "q:"
DOCUMENT_PREFIX = "d:"

SNAPSHOT_HEADER = "trailgraph v1"


def normalize_query(text: str) -> str:
    """Lowercase, trim, and collapse internal whitespace to single spaces."""
    return " ".join(text.lower().split())


def query_node_id(text: str) -> str:
    normalized = normalize_query(text)
    if not normalized:
        raise GraphError("query text is blank after normalization")
    return QUERY_PREFIX + normalized


def document_node_id(shot_id: str) -> str:
    if not shot_id or any(c.isspace() for c in shot_id):
        raise GraphError(f"invalid shot id {shot_id!r}")
    return DOCUMENT_PREFIX + shot_id


def node_kind(node_id: str) -> NodeKind:
    if node_id.startswith(QUERY_PREFIX):
        return NodeKind.QUERY
    if node_id.startswith(DOCUMENT_PREFIX):
        return NodeKind.DOCUMENT
    raise GraphError(f"node id {node_id!r} lacks a kind prefix")


@dataclass
class Edge:
    """A traversed trail step; weight accumulates, count tracks contributing actions."""

    src: str
    dst: str
    weight: float
    count: int


@dataclass(frozen=True)
class GraphStats:
    node_count: int
    query_node_count: int
    document_node_count: int
    edge_count: int
    total_weight: float


class TrailGraph:
    """Mutable trail graph with consistent out- and in-edge indexes."""

    __slots__ = ("_kinds", "_out", "_in")

    def __init__(self) -> None:
        self._kinds: dict[str, NodeKind] = {}
        self._out: dict[str, dict[str, Edge]] = {}
        self._in: dict[str, dict[str, Edge]] = {}

    # -- nodes ----------------------------------------------------------

    def ensure_node(self, node_id: str) -> str:
        if node_id not in self._kinds:
            self._kinds[node_id] = node_kind(node_id)
            self._out[node_id] = {}
            self._in[node_id] = {}
        return node_id

    def has_node(self, node_id: str) -> bool:
        return node_id in self._kinds

    def kind(self, node_id: str) -> NodeKind:
        return self._kinds[node_id]

    def node_ids(self) -> Iterator[str]:
        return iter(self._kinds)

    # -- edges ----------------------------------------------------------

    def accumulate(self, src: str, dst: str, weight: float, count: int = 1) -> Edge:
        """Add weight and count onto the (src, dst) edge, creating it if needed."""
        if src == dst:
            raise GraphError(f"self-loop on {src!r}")
        if weight < 0 or not math.isfinite(weight):
            raise GraphError(f"edge weight must be finite and >= 0, got {weight!r}")
        if count < 1:
            raise GraphError("edge count increment must be >= 1")
        self.ensure_node(src)
        self.ensure_node(dst)
        edge = self._out[src].get(dst)
        if edge is None:
            edge = Edge(src, dst, 0.0, 0)
            self._out[src][dst] = edge
            self._in[dst][src] = edge
        edge.weight += weight
        edge.count += count
        return edge

    def edge(self, src: str, dst: str) -> Edge | None:
        return self._out.get(src, {}).get(dst)

    def out_edges(self, node_id: str) -> list[Edge]:
        return list(self._out.get(node_id, {}).values())

    def in_edges(self, node_id: str) -> list[Edge]:
        return list(self._in.get(node_id, {}).values())

    def edges(self) -> Iterator[Edge]:
        for per_dst in self._out.values():
            yield from per_dst.values()

    def out_weight(self, node_id: str) -> float:
        return sum(e.weight for e in self._out.get(node_id, {}).values())

    def interaction_value(self, node_id: str) -> float:
        """Sum of edge weights leading into the node; 0 for unknown nodes."""
        return sum(e.weight for e in self._in.get(node_id, {}).values())

    # -- whole-graph ----------------------------------------------------

    def copy(self) -> "TrailGraph":
        dup = TrailGraph()
        for node_id in self._kinds:
            dup.ensure_node(node_id)
        for edge in self.edges():
            dup.accumulate(edge.src, edge.dst, edge.weight, edge.count)
        return dup

    def stats(self) -> GraphStats:
        query_nodes = sum(1 for k in self._kinds.values() if k is NodeKind.QUERY)
        edge_count = 0
        total_weight = 0.0
        for edge in self.edges():
            edge_count += 1
            total_weight += edge.weight
        return GraphStats(
            node_count=len(self._kinds),
            query_node_count=query_nodes,
            document_node_count=len(self._kinds) - query_nodes,
            edge_count=edge_count,
            total_weight=total_weight,
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TrailGraph):
            return NotImplemented
        if set(self._kinds) != set(other._kinds):
            return False
        mine = {(e.src, e.dst): (e.weight, e.count) for e in self.edges()}
        theirs = {(e.src, e.dst): (e.weight, e.count) for e in other.edges()}
        return mine == theirs

    def __repr__(self) -> str:
        s = self.stats()
        return f"TrailGraph(nodes={s.node_count}, edges={s.edge_count}, weight={s.total_weight:g})"


class TrailBuilder:
    """Applies one session's events to a graph, maintaining the trail cursor.

    The cursor is the most recently visited node. Query events create (or
    revisit) a query node and link it from the cursor with a zero-weight
    structural step. Document events link cursor -> document with the
    action's weight; repeat actions on the cursor node reinforce the edge
    that led into it instead of creating a self-loop. Plays at or under the
    threshold are skipped entirely.
    """

    def __init__(self, graph: TrailGraph, table: WeightTable) -> None:
        self.graph = graph
        self.table = table
        self._cursor: str | None = None
        self._entry_edge: Edge | None = None  # edge used to reach the cursor in this session

    def apply(self, event) -> None:
        if event.action is ActionType.QUERY:
            node_id = query_node_id(event.target)
            self.graph.ensure_node(node_id)
            if self._cursor is None:
                self._cursor = node_id
                self._entry_edge = None
            elif self._cursor != node_id:
                self._entry_edge = self.graph.accumulate(self._cursor, node_id, 0.0)
                self._cursor = node_id
            return

        weight = action_weight(event.action, event.duration_ms, self.table)
        if weight == 0.0 and event.action is ActionType.PLAY:
            return
        node_id = document_node_id(event.target)
        if self._cursor is None:
            self.graph.ensure_node(node_id)
            self._cursor = node_id
            self._entry_edge = None
        elif self._cursor == node_id:
            if self._entry_edge is not None:
                self._entry_edge.weight += weight
                self._entry_edge.count += 1
            # no in-edge yet in this session: the weight is dropped
        else:
            self._entry_edge = self.graph.accumulate(self._cursor, node_id, weight)
            self._cursor = node_id


def add_session(graph: TrailGraph, session: Session, table: WeightTable) -> TrailGraph:
    """Fold one session's trail into the graph (single-writer; mutates in place)."""
    session.validate()
    builder = TrailBuilder(graph, table)
    for event in session.events:
        builder.apply(event)
    return graph


def interaction_value(graph: TrailGraph, node_id: str) -> float:
    return graph.interaction_value(node_id)


def merge(g1: TrailGraph, g2: TrailGraph) -> TrailGraph:
    """Node union and edge-wise weight/count addition, as a new graph."""
    merged = g1.copy()
    for node_id in g2.node_ids():
        merged.ensure_node(node_id)
    for edge in g2.edges():
        merged.accumulate(edge.src, edge.dst, edge.weight, edge.count)
    return merged


def stats(graph: TrailGraph) -> GraphStats:
    return graph.stats()


def snapshot(graph: TrailGraph) -> bytes:
    """Serialize to the versioned line format; byte-identical for equal graphs.

    Nodes are sorted by id and edges by (src, dst); float weights use repr so
    they round-trip exactly.
    """
    lines = [SNAPSHOT_HEADER]
    node_ids = sorted(graph.node_ids())
    lines.append(f"nodes {len(node_ids)}")
    lines.extend(node_ids)
    edges = sorted(graph.edges(), key=lambda e: (e.src, e.dst))
    lines.append(f"edges {len(edges)}")
    for edge in edges:
        lines.append(f"{edge.src}\t{edge.dst}\t{edge.weight!r}\t{edge.count}")
    return ("\n".join(lines) + "\n").encode("utf-8")


def load(data: bytes) -> TrailGraph:
    """Parse a snapshot produced by :func:`snapshot`."""
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise SnapshotError("snapshot is not valid UTF-8") from exc
    lines = text.splitlines()
    if not lines or lines[0] != SNAPSHOT_HEADER:
        found = lines[0] if lines else "<empty>"
        raise SnapshotError(f"unsupported snapshot header {found!r}")
    graph = TrailGraph()
    pos = 1
    try:
        tag, count_str = lines[pos].split(" ")
        if tag != "nodes":
            raise SnapshotError("expected node table")
        node_count = int(count_str)
        pos += 1
        for _ in range(node_count):
            node_id = lines[pos]
            if graph.has_node(node_id):
                raise SnapshotError(f"duplicate node {node_id!r}")
            graph.ensure_node(node_id)
            pos += 1
        tag, count_str = lines[pos].split(" ")
        if tag != "edges":
            raise SnapshotError("expected edge table")
        edge_count = int(count_str)
        pos += 1
        for _ in range(edge_count):
            parts = lines[pos].split("\t")
            if len(parts) != 4:
                raise SnapshotError(f"malformed edge line {lines[pos]!r}")
            src, dst, weight_str, count_str = parts
            if not graph.has_node(src) or not graph.has_node(dst):
                raise SnapshotError(f"edge references unknown node: {lines[pos]!r}")
            if graph.edge(src, dst) is not None:
                raise SnapshotError(f"duplicate edge {src!r} -> {dst!r}")
            graph.accumulate(src, dst, float(weight_str), int(count_str))
            pos += 1
    except (IndexError, ValueError, GraphError) as exc:
        if isinstance(exc, SnapshotError):
            raise
        raise SnapshotError(f"corrupt snapshot: {exc}") from exc
    if pos != len(lines):
        raise SnapshotError("trailing data after edge table")
    return graph


def write_snapshot(graph: TrailGraph, path) -> None:
    from pathlib import Path

    Path(path).write_bytes(snapshot(graph))


def read_snapshot(path) -> TrailGraph:
    from pathlib import Path

    return load(Path(path).read_bytes())


def build_graph(sessions: Iterable[Session], table: WeightTable) -> TrailGraph:
    """Convenience: fold many sessions into a fresh graph."""
    graph = TrailGraph()
    for session in sessions:
        add_session(graph, session, table)
    return graph
