"""Event model: log parsing, sessionization, action weights."""

import json
import random

import pytest
from hypothesis import given, strategies as st

from trailmine.events import (
    ActionEvent,
    ActionType,
    DEFAULT_PLAY_THRESHOLD_MS,
    DEFAULT_WEIGHTS,
    EventError,
    LogFormatError,
    WeightTable,
    action_weight,
    event_to_json_line,
    parse_event_log,
    serialize_event_log,
    sessionize,
)

from conftest import make_event


def test_action_taxonomy_is_the_nine_kinds():
    names = {a.value for a in ActionType}
    assert names == {
        "Query", "MarkRelevant", "MarkMaybeRelevant", "MarkNotRelevant",
        "View", "Play", "BrowseKeyframes", "NavigateWithin", "Tooltip",
    }


# -- parsing ---------------------------------------------------------------


def test_parse_single_query_line():
    line = json.dumps({
        "event_id": "e1", "session_id": "s1", "user_id": "u1",
        "timestamp_ms": 5, "action": "Query", "target": "red car",
    })
    events = parse_event_log(line)
    assert len(events) == 1
    assert events[0].action is ActionType.QUERY
    assert events[0].target == "red car"


def test_parse_empty_input():
    assert parse_event_log(b"") == []
    assert parse_event_log("\n\n") == []


def test_round_trip_all_nine_actions():
    events = []
    for i, action in enumerate(ActionType, start=1):
        target = "find goals" if action is ActionType.QUERY else "shotX"
        duration = 4500 if action is ActionType.PLAY else None
        events.append(make_event(i, action, target, duration_ms=duration, task_id="t1"))
    data = serialize_event_log(events)
    assert serialize_event_log(parse_event_log(data)) == data
    assert [e.action for e in parse_event_log(data)] == list(ActionType)


def test_parse_errors_name_the_line():
    good = event_to_json_line(make_event(1, ActionType.VIEW))
    with pytest.raises(LogFormatError, match="line 2"):
        parse_event_log(good + "\n{nope\n")
    with pytest.raises(LogFormatError, match="line 2"):
        parse_event_log(good + "\n[1, 2]\n")


def test_parse_rejects_play_without_duration():
    record = {
        "event_id": "e1", "session_id": "s1", "user_id": "u1",
        "timestamp_ms": 0, "action": "Play", "target": "shotA",
    }
    with pytest.raises(LogFormatError, match="duration_ms"):
        parse_event_log(json.dumps(record))


def test_parse_rejects_unknown_action_and_fields():
    base = {
        "event_id": "e1", "session_id": "s1", "user_id": "u1",
        "timestamp_ms": 0, "action": "Wave", "target": "shotA",
    }
    with pytest.raises(LogFormatError, match="unknown action"):
        parse_event_log(json.dumps(base))
    base["action"] = "View"
    base["color"] = "red"
    with pytest.raises(LogFormatError, match="unknown field"):
        parse_event_log(json.dumps(base))


def test_parse_rejects_duplicate_event_id():
    line = event_to_json_line(make_event(1, ActionType.VIEW))
    with pytest.raises(LogFormatError, match="duplicate event_id"):
        parse_event_log(line + "\n" + line)


def test_event_invariants():
    with pytest.raises(EventError, match="non-blank query"):
        make_event(1, ActionType.QUERY, "   ")
    with pytest.raises(EventError, match="without whitespace"):
        make_event(1, ActionType.VIEW, "shot A")
    with pytest.raises(EventError, match="only allowed on Play"):
        make_event(1, ActionType.VIEW, "shotA", duration_ms=100)
    with pytest.raises(EventError, match="timestamp_ms"):
        make_event(1, ActionType.VIEW, timestamp_ms=-5)
    with pytest.raises(EventError):
        ActionEvent("", "s1", "u1", 0, ActionType.VIEW, "shotA")


# -- sessionize --------------------------------------------------------------


def test_sessionize_keeps_contiguous_group():
    events = [make_event(i, timestamp_ms=i * 10_000) for i in range(1, 4)]
    sessions = sessionize(events)
    assert len(sessions) == 1
    assert [e.event_id for e in sessions[0].events] == ["e0001", "e0002", "e0003"]


def test_sessionize_splits_on_gap():
    gap = 30 * 60 * 1000
    events = [
        make_event(1, timestamp_ms=0),
        make_event(2, timestamp_ms=31 * 60 * 1000),
    ]
    sessions = sessionize(events, gap_ms=gap)
    assert [s.session_id for s in sessions] == ["s1#1", "s1#2"]
    # each sub-session's events carry the suffixed id
    assert all(e.session_id == s.session_id for s in sessions for e in s.events)


def test_sessionize_boundary_gap_does_not_split():
    events = [make_event(1, timestamp_ms=0), make_event(2, timestamp_ms=1000)]
    assert len(sessionize(events, gap_ms=1000)) == 1


def test_sessionize_groups_by_user_and_session():
    events = [
        make_event(1, session_id="a", user_id="u1"),
        make_event(2, session_id="a", user_id="u2"),
        make_event(3, session_id="b", user_id="u1"),
    ]
    sessions = sessionize(events)
    assert sorted((s.user_id, s.session_id) for s in sessions) == [
        ("u1", "a"), ("u1", "b"), ("u2", "a"),
    ]


def test_sessionize_rejects_bad_gap():
    with pytest.raises(ValueError):
        sessionize([], gap_ms=0)


@given(st.randoms(use_true_random=False))
def test_sessionize_is_permutation_invariant(rnd):
    events = [
        make_event(i, timestamp_ms=rnd.randrange(0, 10**7), session_id=rnd.choice("ab"))
        for i in range(1, 25)
    ]
    shuffled = events[:]
    rnd.shuffle(shuffled)
    assert sessionize(shuffled) == sessionize(events)


def test_sessionize_breaks_timestamp_ties_by_event_id():
    events = [
        make_event(2, timestamp_ms=1000),
        make_event(1, timestamp_ms=1000),
    ]
    session = sessionize(events)[0]
    assert [e.event_id for e in session.events] == ["e0001", "e0002"]


def test_session_validate_rejects_disorder():
    session = sessionize([make_event(1), make_event(2)])[0]
    session.events.reverse()
    with pytest.raises(EventError, match="out of order"):
        session.validate()


# -- action weights ----------------------------------------------------------


def test_short_play_weighs_nothing():
    table = WeightTable.default()
    assert action_weight(ActionType.PLAY, 2500, table) == 0.0


def test_play_threshold_is_a_step_function():
    table = WeightTable.default()
    assert action_weight(ActionType.PLAY, DEFAULT_PLAY_THRESHOLD_MS, table) == 0.0
    assert action_weight(ActionType.PLAY, DEFAULT_PLAY_THRESHOLD_MS + 1, table) == 2.0


def test_default_weight_lookups():
    table = WeightTable.default()
    assert action_weight(ActionType.PLAY, 10_000, table) == 2.0
    assert action_weight(ActionType.MARK_RELEVANT, None, table) == 4.0
    assert action_weight(ActionType.QUERY, None, table) == 0.0


def test_action_weight_duration_contract():
    table = WeightTable.default()
    with pytest.raises(EventError):
        action_weight(ActionType.PLAY, None, table)
    with pytest.raises(EventError):
        action_weight(ActionType.VIEW, 500, table)


@given(
    st.sampled_from(list(ActionType)),
    st.integers(min_value=0, max_value=10**7),
)
def test_action_weight_nonnegative_and_finite(action, duration):
    table = WeightTable.default()
    d = duration if action is ActionType.PLAY else None
    w = action_weight(action, d, table)
    assert w >= 0.0
    assert w == w and w not in (float("inf"), float("-inf"))


def test_weight_table_validation():
    with pytest.raises(ValueError, match="Query weight must be 0"):
        WeightTable(weights={**DEFAULT_WEIGHTS, ActionType.QUERY: 1.0})
    incomplete = dict(DEFAULT_WEIGHTS)
    del incomplete[ActionType.VIEW]
    with pytest.raises(ValueError, match="missing View"):
        WeightTable(weights=incomplete)
    with pytest.raises(ValueError, match="play_threshold_ms"):
        WeightTable(play_threshold_ms=-1)


def test_weight_table_file_round_trip(tmp_path):
    path = tmp_path / "weights.json"
    path.write_text(json.dumps({"Play": 3.5, "play_threshold_ms": 2000}))
    table = WeightTable.from_file(path)
    assert table.weights[ActionType.PLAY] == 3.5
    assert table.weights[ActionType.VIEW] == 1.0  # untouched default
    assert table.play_threshold_ms == 2000
    path.write_text(json.dumps({"Jump": 1.0}))
    with pytest.raises(ValueError, match="unknown weight table key"):
        WeightTable.from_file(path)


def test_serialize_parse_identity_on_random_logs():
    rng = random.Random(17)
    events = []
    for i in range(200):
        action = rng.choice(list(ActionType))
        target = "some query text" if action is ActionType.QUERY else f"shot{rng.randrange(30)}"
        duration = rng.randrange(0, 20_000) if action is ActionType.PLAY else None
        events.append(make_event(i + 1, action, target, timestamp_ms=rng.randrange(10**9),
                                 duration_ms=duration))
    data = serialize_event_log(events)
    assert parse_event_log(data) == events
