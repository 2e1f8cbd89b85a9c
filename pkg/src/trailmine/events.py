"""Action taxonomy, event-log parsing, sessionization, and action weighting.

The interaction log is JSON Lines: one event per line with the fields
``event_id, session_id, user_id, timestamp_ms, action, target`` plus
``duration_ms`` (Play only) and an optional ``task_id``. Action names are
UpperCamelCase (``MarkRelevant``, ``BrowseKeyframes``, ...).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping


class ActionType(Enum):
    """The nine user actions captured by the interaction log."""

    QUERY = "Query"
    MARK_RELEVANT = "MarkRelevant"
    MARK_MAYBE_RELEVANT = "MarkMaybeRelevant"
    MARK_NOT_RELEVANT = "MarkNotRelevant"
    VIEW = "View"
    PLAY = "Play"
    BROWSE_KEYFRAMES = "BrowseKeyframes"
    NAVIGATE_WITHIN = "NavigateWithin"
    TOOLTIP = "Tooltip"


ACTION_BY_NAME: Mapping[str, ActionType] = {a.value: a for a in ActionType}

MARK_ACTIONS = frozenset(
    {ActionType.MARK_RELEVANT, ActionType.MARK_MAYBE_RELEVANT, ActionType.MARK_NOT_RELEVANT}
)

EVENT_FIELDS = (
    "event_id",
    "session_id",
    "user_id",
    "timestamp_ms",
    "action",
    "target",
    "duration_ms",
    "task_id",
)

DEFAULT_SESSION_GAP_MS = 30 * 60 * 1000


class EventError(ValueError):
    """An event violates the ActionEvent invariants."""


class LogFormatError(ValueError):
    """An event log cannot be parsed; the message names the offending line."""


def _require_id(value: object, name: str) -> str:
    if not isinstance(value, str) or not value:
        raise EventError(f"{name} must be a non-empty string, got {value!r}")
    return value


@dataclass(frozen=True)
class ActionEvent:
    """One timestamped user action within a session.

    ``target`` holds the query text for Query events and the shot identifier
    for everything else. ``duration_ms`` is required for Play and forbidden
    for all other kinds.
    """

    event_id: str
    session_id: str
    user_id: str
    timestamp_ms: int
    action: ActionType
    target: str
    duration_ms: int | None = None
    task_id: str | None = None

    def __post_init__(self) -> None:
        _require_id(self.event_id, "event_id")
        _require_id(self.session_id, "session_id")
        _require_id(self.user_id, "user_id")
        if isinstance(self.timestamp_ms, bool) or not isinstance(self.timestamp_ms, int):
            raise EventError(f"event {self.event_id}: timestamp_ms must be an integer")
        if self.timestamp_ms < 0:
            raise EventError(f"event {self.event_id}: timestamp_ms must be >= 0")
        if not isinstance(self.action, ActionType):
            raise EventError(f"event {self.event_id}: action must be an ActionType")
        if not isinstance(self.target, str):
            raise EventError(f"event {self.event_id}: target must be a string")
        if self.action is ActionType.QUERY:
            if not self.target.strip():
                raise EventError(f"event {self.event_id}: Query requires non-blank query text")
        else:
            if not self.target or any(c.isspace() for c in self.target):
                raise EventError(
                    f"event {self.event_id}: shot target must be non-empty without whitespace"
                )
        if self.action is ActionType.PLAY:
            if (
                isinstance(self.duration_ms, bool)
                or not isinstance(self.duration_ms, int)
                or self.duration_ms < 0
            ):
                raise EventError(
                    f"event {self.event_id}: Play requires a non-negative integer duration_ms"
                )
        elif self.duration_ms is not None:
            raise EventError(
                f"event {self.event_id}: duration_ms is only allowed on Play events"
            )
        if self.task_id is not None and (not isinstance(self.task_id, str) or not self.task_id):
            raise EventError(f"event {self.event_id}: task_id must be a non-empty string or absent")


def event_to_dict(event: ActionEvent) -> dict:
    """Map an event to its log record, keys in canonical order, absent optionals omitted."""
    record = {
        "event_id": event.event_id,
        "session_id": event.session_id,
        "user_id": event.user_id,
        "timestamp_ms": event.timestamp_ms,
        "action": event.action.value,
        "target": event.target,
    }
    if event.duration_ms is not None:
        record["duration_ms"] = event.duration_ms
    if event.task_id is not None:
        record["task_id"] = event.task_id
    return record


def event_to_json_line(event: ActionEvent) -> str:
    return json.dumps(event_to_dict(event), separators=(",", ":"), ensure_ascii=True)


def serialize_event_log(events: Iterable[ActionEvent]) -> bytes:
    """Canonical log form: one compact JSON object per line, trailing newline each."""
    return "".join(event_to_json_line(e) + "\n" for e in events).encode("utf-8")


def _event_from_record(record: dict) -> ActionEvent:
    unknown = set(record) - set(EVENT_FIELDS)
    if unknown:
        raise EventError(f"unknown field(s): {', '.join(sorted(unknown))}")
    missing = {"event_id", "session_id", "user_id", "timestamp_ms", "action", "target"} - set(record)
    if missing:
        raise EventError(f"missing field(s): {', '.join(sorted(missing))}")
    action_name = record["action"]
    action = ACTION_BY_NAME.get(action_name) if isinstance(action_name, str) else None
    if action is None:
        raise EventError(f"unknown action {action_name!r}")
    return ActionEvent(
        event_id=record["event_id"],
        session_id=record["session_id"],
        user_id=record["user_id"],
        timestamp_ms=record["timestamp_ms"],
        action=action,
        target=record["target"],
        duration_ms=record.get("duration_ms"),
        task_id=record.get("task_id"),
    )


def event_from_dict(record: dict) -> ActionEvent:
    """Build one event from a parsed JSON object, validating every field."""
    if not isinstance(record, dict):
        raise EventError("expected a JSON object")
    return _event_from_record(record)


def parse_event_log(data: bytes | str) -> list[ActionEvent]:
    """Parse a JSON Lines event log, in file order.

    Raises :class:`LogFormatError` naming the line number for malformed JSON,
    unknown action names, invariant violations, or duplicate event ids. Blank
    lines are skipped.
    """
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    events: list[ActionEvent] = []
    seen_ids: set[str] = set()
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise LogFormatError(f"line {lineno}: invalid JSON: {exc.msg}") from exc
        if not isinstance(record, dict):
            raise LogFormatError(f"line {lineno}: expected a JSON object")
        try:
            event = _event_from_record(record)
        except EventError as exc:
            raise LogFormatError(f"line {lineno}: {exc}") from exc
        if event.event_id in seen_ids:
            raise LogFormatError(f"line {lineno}: duplicate event_id {event.event_id!r}")
        seen_ids.add(event.event_id)
        events.append(event)
    return events


def read_event_log(path: str | Path) -> list[ActionEvent]:
    return parse_event_log(Path(path).read_bytes())


@dataclass
class Session:
    """One user's contiguous interaction sequence, events in time order."""

    session_id: str
    user_id: str
    events: list[ActionEvent]

    def validate(self) -> None:
        prev_ts: int | None = None
        for event in self.events:
            if event.session_id != self.session_id or event.user_id != self.user_id:
                raise EventError(
                    f"event {event.event_id}: session/user does not match "
                    f"({self.session_id}, {self.user_id})"
                )
            if prev_ts is not None and event.timestamp_ms < prev_ts:
                raise EventError(f"event {event.event_id}: timestamps out of order")
            prev_ts = event.timestamp_ms


def sessionize(events: Iterable[ActionEvent], gap_ms: int = DEFAULT_SESSION_GAP_MS) -> list[Session]:
    """Group events into sessions by (user_id, session_id), sorted by time.

    A group whose consecutive events are more than ``gap_ms`` apart is split
    into numbered sub-sessions; the session id (and each event's) gets a
    ``#k`` suffix. Within a group, ties in timestamp are broken by event_id so
    the result does not depend on input order.
    """
    if gap_ms <= 0:
        raise ValueError("gap_ms must be > 0")
    groups: dict[tuple[str, str], list[ActionEvent]] = {}
    for event in events:
        groups.setdefault((event.user_id, event.session_id), []).append(event)

    sessions: list[Session] = []
    for user_id, session_id in sorted(groups):
        ordered = sorted(
            groups[(user_id, session_id)], key=lambda e: (e.timestamp_ms, e.event_id)
        )
        parts: list[list[ActionEvent]] = [[ordered[0]]]
        for event in ordered[1:]:
            if event.timestamp_ms - parts[-1][-1].timestamp_ms > gap_ms:
                parts.append([event])
            else:
                parts[-1].append(event)
        if len(parts) == 1:
            sessions.append(Session(session_id, user_id, parts[0]))
        else:
            for k, part in enumerate(parts, start=1):
                sub_id = f"{session_id}#{k}"
                sessions.append(
                    Session(sub_id, user_id, [replace(e, session_id=sub_id) for e in part])
                )
    return sessions


# Explicit judgments outrank implicit signals; queries create nodes, not
# weighted steps, so Query stays at zero.
DEFAULT_WEIGHTS: Mapping[ActionType, float] = {
    ActionType.QUERY: 0.0,
    ActionType.VIEW: 1.0,
    ActionType.TOOLTIP: 0.5,
    ActionType.BROWSE_KEYFRAMES: 0.5,
    ActionType.NAVIGATE_WITHIN: 0.5,
    ActionType.PLAY: 2.0,
    ActionType.MARK_MAYBE_RELEVANT: 2.0,
    ActionType.MARK_RELEVANT: 4.0,
    ActionType.MARK_NOT_RELEVANT: 0.5,
}

DEFAULT_PLAY_THRESHOLD_MS = 3000


@dataclass(frozen=True)
class WeightTable:
    """Per-action graph weights plus the minimum play time that counts."""

    weights: Mapping[ActionType, float] = field(default_factory=lambda: dict(DEFAULT_WEIGHTS))
    play_threshold_ms: int = DEFAULT_PLAY_THRESHOLD_MS

    def __post_init__(self) -> None:
        for action in ActionType:
            if action not in self.weights:
                raise ValueError(f"weight table missing {action.value}")
            w = self.weights[action]
            if not isinstance(w, (int, float)) or not math.isfinite(w) or w < 0:
                raise ValueError(f"weight for {action.value} must be finite and >= 0, got {w!r}")
        if self.weights[ActionType.QUERY] != 0:
            raise ValueError("Query weight must be 0")
        if isinstance(self.play_threshold_ms, bool) or not isinstance(self.play_threshold_ms, int):
            raise ValueError("play_threshold_ms must be an integer")
        if self.play_threshold_ms < 0:
            raise ValueError("play_threshold_ms must be >= 0")

    @classmethod
    def default(cls) -> "WeightTable":
        return cls()

    @classmethod
    def from_file(cls, path: str | Path) -> "WeightTable":
        """Load a weight config: keys are action names, plus ``play_threshold_ms``.

        Missing actions keep their defaults; unknown keys are rejected.
        """
        raw = json.loads(Path(path).read_text("utf-8"))
        if not isinstance(raw, dict):
            raise ValueError(f"{path}: weight table must be a JSON object")
        weights = dict(DEFAULT_WEIGHTS)
        threshold = DEFAULT_PLAY_THRESHOLD_MS
        for key, value in raw.items():
            if key == "play_threshold_ms":
                threshold = value
            elif key in ACTION_BY_NAME:
                weights[ACTION_BY_NAME[key]] = float(value)
            else:
                raise ValueError(f"{path}: unknown weight table key {key!r}")
        return cls(weights=weights, play_threshold_ms=threshold)

    def to_dict(self) -> dict:
        out = {a.value: self.weights[a] for a in ActionType}
        out["play_threshold_ms"] = self.play_threshold_ms
        return out


def action_weight(action: ActionType, duration_ms: int | None, table: WeightTable) -> float:
    """Graph weight contributed by one action.

    Play actions at or under the threshold contribute 0; only plays strictly
    longer than ``play_threshold_ms`` count.
    """
    if action is ActionType.PLAY:
        if duration_ms is None:
            raise EventError("Play requires duration_ms")
        if duration_ms <= table.play_threshold_ms:
            return 0.0
    elif duration_ms is not None:
        raise EventError(f"{action.value} must not carry duration_ms")
    return float(table.weights[action])
