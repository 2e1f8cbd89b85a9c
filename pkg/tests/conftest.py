"""Shared fixtures: scripted sessions, small corpora, random generators."""

import random

import pytest

from trailmine.events import ActionEvent, ActionType, Session
from trailmine.retrieval import Corpus, ShotRecord


def make_event(
    i,
    action=ActionType.VIEW,
    target="shotA",
    session_id="s1",
    user_id="u1",
    timestamp_ms=None,
    duration_ms=None,
    task_id=None,
):
    return ActionEvent(
        event_id=f"e{i:04d}",
        session_id=session_id,
        user_id=user_id,
        timestamp_ms=timestamp_ms if timestamp_ms is not None else 1000 * i,
        action=action,
        target=target,
        duration_ms=duration_ms,
        task_id=task_id,
    )


@pytest.fixture
def scripted_session():
    """Query basketball; View shotA; Play shotA 10 s; MarkRelevant shotA.

    With default weights the trail collapses to one edge
    q:basketball -> d:shotA carrying 1.0 + 2.0 + 4.0 = 7.0 over 3 actions.
    """
    events = [
        make_event(1, ActionType.QUERY, "basketball"),
        make_event(2, ActionType.VIEW, "shotA"),
        make_event(3, ActionType.PLAY, "shotA", duration_ms=10_000),
        make_event(4, ActionType.MARK_RELEVANT, "shotA"),
    ]
    return Session(session_id="s1", user_id="u1", events=events)


@pytest.fixture
def tiny_corpus():
    """Five shots in one video; scores for "car" are hand-derivable."""
    records = [
        ShotRecord("s1", "v1", 0, "red car", "kf/s1.jpg"),
        ShotRecord("s2", "v1", 1, "blue sky", "kf/s2.jpg"),
        ShotRecord("s3", "v1", 2, "green car", "kf/s3.jpg"),
        ShotRecord("s4", "v1", 3, "red red car", "kf/s4.jpg"),
        ShotRecord("s5", "v1", 4, "cloud sky rain", "kf/s5.jpg"),
    ]
    return Corpus(records)


def random_session(rng: random.Random, session_id: str, user_id: str, n_events: int) -> Session:
    """A structurally valid random session over a small shot universe."""
    shots = [f"shot{c}" for c in "ABCDEFGH"]
    queries = ["red car", "blue sky", "storm", "dunk highlight"]
    events = []
    ts = rng.randrange(10**12)
    for i in range(n_events):
        action = rng.choice(list(ActionType))
        if action is ActionType.QUERY:
            target = rng.choice(queries)
            duration = None
        else:
            target = rng.choice(shots)
            duration = rng.choice([800, 2500, 3000, 3001, 9000]) if action is ActionType.PLAY else None
        events.append(
            ActionEvent(
                event_id=f"{session_id}-e{i:04d}",
                session_id=session_id,
                user_id=user_id,
                timestamp_ms=ts,
                action=action,
                target=target,
                duration_ms=duration,
            )
        )
        ts += rng.randrange(1, 60_000)
    return Session(session_id=session_id, user_id=user_id, events=events)
