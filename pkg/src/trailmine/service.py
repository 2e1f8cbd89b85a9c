"""HTTP service: search, durable event ingestion, live recommendations.

The append-only event log is the source of truth. Ingestion appends and
fsyncs before acknowledging, then folds the events into the live graph
through per-session trail builders; on startup the whole log is replayed,
so a crash after acknowledgment never loses accepted events. Readers are
served from a frozen copy of the graph that is swapped in after every
accepted batch, never from the structure being mutated.

A sidecar log records which recommendations were presented to which
session, keeping the once-only rule intact across restarts.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import Body, FastAPI, HTTPException, Query

from .events import ActionEvent, EventError, WeightTable, event_from_dict, event_to_dict
from .graph import (
    DOCUMENT_PREFIX,
    QUERY_PREFIX,
    TrailBuilder,
    TrailGraph,
    write_snapshot,
)
from .recommend import (
    RecParams,
    Recommendation,
    SessionState,
    mark_shown,
    recommend_documents,
    recommend_queries,
    update_state,
)
from .retrieval import SearchIndex, UnknownShotError, neighbors, read_corpus


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ServiceConfig:
    corpus_path: str
    data_dir: str
    host: str = "127.0.0.1"
    port: int = 8787
    weights_path: str | None = None
    static_dir: str | None = None
    rec_params: RecParams = field(default_factory=RecParams)

    def __post_init__(self) -> None:
        if not self.corpus_path:
            raise ConfigError("corpus_path is required")
        if not self.data_dir:
            raise ConfigError("data_dir is required")
        if not 0 < self.port < 65536:
            raise ConfigError(f"port out of range: {self.port}")

    @property
    def event_log_path(self) -> Path:
        return Path(self.data_dir) / "events.log"

    @property
    def shown_log_path(self) -> Path:
        return Path(self.data_dir) / "shown.log"

    @property
    def snapshot_path(self) -> Path:
        return Path(self.data_dir) / "graph.snapshot"

    @staticmethod
    def from_file(path: str | Path) -> "ServiceConfig":
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        known = {"corpus_path", "data_dir", "host", "port", "weights_path",
                 "static_dir", "rec_params"}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kwargs = {k: v for k, v in raw.items() if k != "rec_params"}
        if "rec_params" in raw:
            kwargs["rec_params"] = RecParams(**raw["rec_params"])
        if "corpus_path" not in kwargs or "data_dir" not in kwargs:
            raise ConfigError("corpus_path and data_dir are required")
        return ServiceConfig(**kwargs)


class TrailService:
    """All mutable state behind the HTTP handlers; single-writer via a lock."""

    def __init__(self, config: ServiceConfig) -> None:
        self.config = config
        self.corpus = read_corpus(config.corpus_path)
        self.index = SearchIndex(self.corpus)
        self.table = (
            WeightTable.from_file(config.weights_path)
            if config.weights_path
            else WeightTable.default()
        )
        self.lock = threading.Lock()
        self.graph = TrailGraph()
        self.builders: dict[str, TrailBuilder] = {}
        self.states: dict[str, SessionState] = {}
        self.session_users: dict[str, str] = {}
        self.session_last_ms: dict[str, int] = {}
        self.seen_event_ids: set[str] = set()
        Path(config.data_dir).mkdir(parents=True, exist_ok=True)
        self._replay()
        # readers get a frozen copy, swapped after each accepted batch
        self.read_graph = self.graph.copy()

    # -- startup ---------------------------------------------------------

    def _replay(self) -> None:
        log_path = self.config.event_log_path
        if log_path.exists():
            with log_path.open("r", encoding="utf-8") as fh:
                for lineno, line in enumerate(fh, start=1):
                    if not line.strip():
                        continue
                    try:
                        event = event_from_dict(json.loads(line))
                    except (json.JSONDecodeError, EventError) as exc:
                        raise ConfigError(f"{log_path}:{lineno}: {exc}") from exc
                    self._apply(event)
        shown_path = self.config.shown_log_path
        if shown_path.exists():
            with shown_path.open("r", encoding="utf-8") as fh:
                for line in fh:
                    if not line.strip():
                        continue
                    record = json.loads(line)
                    state = self._state_for(record["session_id"])
                    for node_id in record["node_ids"]:
                        if node_id not in state.shown_recommendations:
                            state.shown_recommendations.add(node_id)
                            state.shown_order.append(node_id)

    def _state_for(self, session_id: str) -> SessionState:
        if session_id not in self.states:
            self.states[session_id] = SessionState(session_id=session_id)
        return self.states[session_id]

    def _apply(self, event: ActionEvent) -> None:
        """Fold one validated event into graph, builder, and session state."""
        builder = self.builders.get(event.session_id)
        if builder is None:
            builder = TrailBuilder(self.graph, self.table)
            self.builders[event.session_id] = builder
        builder.apply(event)
        update_state(self._state_for(event.session_id), event, self.table)
        self.session_users[event.session_id] = event.user_id
        self.session_last_ms[event.session_id] = event.timestamp_ms
        self.seen_event_ids.add(event.event_id)

    # -- ingestion ---------------------------------------------------------

    def ingest(self, batch: list[dict]) -> int:
        if not batch:
            raise IngestError("empty batch", event_id=None)
        events: list[ActionEvent] = []
        for record in batch:
            event_id = record.get("event_id") if isinstance(record, dict) else None
            try:
                events.append(event_from_dict(record))
            except EventError as exc:
                raise IngestError(str(exc), event_id=event_id) from exc
        session_ids = {e.session_id for e in events}
        if len(session_ids) > 1:
            raise IngestError(
                f"batch mixes sessions {sorted(session_ids)}", event_id=events[0].event_id
            )
        with self.lock:
            session_id = events[0].session_id
            last_ms = self.session_last_ms.get(session_id)
            user_id = self.session_users.get(session_id)
            for event in events:
                if event.event_id in self.seen_event_ids:
                    raise IngestError("duplicate event_id", event_id=event.event_id)
                if user_id is not None and event.user_id != user_id:
                    raise IngestError(
                        f"session {session_id} belongs to user {user_id}",
                        event_id=event.event_id,
                    )
                if last_ms is not None and event.timestamp_ms < last_ms:
                    raise IngestError("timestamps must be non-decreasing", event_id=event.event_id)
                last_ms = event.timestamp_ms
                user_id = event.user_id
            # durable before acknowledged
            with self.config.event_log_path.open("ab") as fh:
                for event in events:
                    fh.write(
                        json.dumps(event_to_dict(event), separators=(",", ":")).encode("utf-8") + b"\n"
                    )
                fh.flush()
                os.fsync(fh.fileno())
            for event in events:
                self._apply(event)
            self.read_graph = self.graph.copy()
        return len(events)

    # -- recommendations -----------------------------------------------------

    def recommendations(self, session_id: str, k: int) -> dict:
        params = RecParams(
            depth=self.config.rec_params.depth,
            damping=self.config.rec_params.damping,
            recency_decay=self.config.rec_params.recency_decay,
            k=k,
        )
        with self.lock:
            state = self.states.get(session_id)
            if state is None:
                return {"documents": [], "queries": []}
            graph = self.read_graph
            documents = recommend_documents(graph, state, params)
            queries = recommend_queries(graph, state, params)
            if documents or queries:
                shown = documents + queries
                with self.config.shown_log_path.open("ab") as fh:
                    fh.write(
                        json.dumps(
                            {"session_id": session_id, "node_ids": [r.node_id for r in shown]},
                            separators=(",", ":"),
                        ).encode("utf-8")
                        + b"\n"
                    )
                    fh.flush()
                    os.fsync(fh.fileno())
                mark_shown(state, shown)
        return {
            "documents": [self._document_payload(rec) for rec in documents],
            "queries": [self._query_payload(rec) for rec in queries],
        }

    def _document_payload(self, rec: Recommendation) -> dict:
        shot_id = rec.node_id[len(DOCUMENT_PREFIX):]
        payload = {"shot_id": shot_id, "score": rec.score}
        record = self.corpus.by_id.get(shot_id)
        if record is not None:
            payload["text"] = record.text
            payload["keyframe_ref"] = record.keyframe_ref
            payload["video_id"] = record.video_id
        return payload

    @staticmethod
    def _query_payload(rec: Recommendation) -> dict:
        return {"query": rec.node_id[len(QUERY_PREFIX):], "score": rec.score}


class IngestError(Exception):
    def __init__(self, message: str, event_id: str | None) -> None:
        super().__init__(message)
        self.event_id = event_id


def create_app(config: ServiceConfig) -> FastAPI:
    service = TrailService(config)
    app = FastAPI(title="trailmine", docs_url=None, redoc_url=None)
    app.state.service = service

    @app.post("/api/events")
    def post_events(batch: list = Body(...)) -> dict:
        try:
            accepted = service.ingest(batch)
        except IngestError as exc:
            raise HTTPException(
                status_code=400, detail={"error": str(exc), "event_id": exc.event_id}
            ) from exc
        return {"accepted": accepted}

    @app.get("/api/recommendations")
    def get_recommendations(session_id: str, k: int = Query(default=10)) -> dict:
        if k < 1:
            raise HTTPException(status_code=400, detail="k must be >= 1")
        return service.recommendations(session_id, k)

    @app.get("/api/search")
    def get_search(q: str = "", k: int = Query(default=10)) -> dict:
        if not q.strip():
            raise HTTPException(status_code=400, detail="query must not be blank")
        if k < 1:
            raise HTTPException(status_code=400, detail="k must be >= 1")
        hits = service.index.search(q, k)
        results = []
        for shot_id, score in hits:
            record = service.corpus.by_id[shot_id]
            results.append(
                {
                    "shot_id": shot_id,
                    "video_id": record.video_id,
                    "seq_index": record.seq_index,
                    "text": record.text,
                    "keyframe_ref": record.keyframe_ref,
                    "score": score,
                }
            )
        return {"results": results}

    @app.get("/api/shots/{shot_id}")
    def get_shot(shot_id: str, radius: int = Query(default=2)) -> dict:
        if radius < 1:
            raise HTTPException(status_code=400, detail="radius must be >= 1")
        record = service.corpus.by_id.get(shot_id)
        if record is None:
            raise HTTPException(status_code=404, detail=f"unknown shot {shot_id!r}")
        try:
            nearby = neighbors(service.corpus, shot_id, radius)
        except UnknownShotError as exc:  # pragma: no cover - guarded above
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        return {
            "shot": record.to_dict(),
            "neighbors": [r.to_dict() for r in nearby],
        }

    @app.get("/api/graph/stats")
    def get_stats() -> dict:
        stats = service.read_graph.stats()
        return {
            "node_count": stats.node_count,
            "query_node_count": stats.query_node_count,
            "document_node_count": stats.document_node_count,
            "edge_count": stats.edge_count,
            "total_weight": stats.total_weight,
        }

    @app.post("/api/admin/snapshot")
    def post_snapshot() -> dict:
        with service.lock:
            write_snapshot(service.graph, service.config.snapshot_path)
            stats = service.graph.stats()
        return {
            "path": str(service.config.snapshot_path),
            "node_count": stats.node_count,
            "edge_count": stats.edge_count,
        }

    @app.get("/api/health")
    def get_health() -> dict:
        return {"status": "ok"}

    static_dir = config.static_dir
    if static_dir and Path(static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")
    return app


def serve(config: ServiceConfig) -> None:  # pragma: no cover - thin wrapper
    import uvicorn

    uvicorn.run(create_app(config), host=config.host, port=config.port, log_level="warning")
