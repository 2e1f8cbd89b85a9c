"""Deterministic synthetic video collection for simulation and tests.

Four search topics are planted into a shot corpus. Each topic has a small
term vocabulary, a set of truly relevant shots, and a larger set of
distractor shots whose text mentions a topic term more prominently than
the relevant shots do, so text search alone is a weak guide to relevance.
Relevant shots appear in short consecutive runs inside home videos, which
makes within-video navigation a plausible route to them. Everything
derives from one seed.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .evaluation import Qrels
from .retrieval import Corpus, ShotRecord

TOPIC_TERMS: dict[str, tuple[str, ...]] = {
    "task-basketball": (
        "basketball", "dunk", "court", "player", "coach", "jersey", "rebound",
        "tipoff", "freethrow", "layup", "timeout", "scoreboard",
    ),
    "task-storm": (
        "storm", "lightning", "flood", "hurricane", "rain", "cloud", "wind",
        "thunder", "hail", "gale", "downpour", "tornado",
    ),
    "task-protest": (
        "protest", "march", "banner", "crowd", "chant", "megaphone", "rally",
        "placard", "picket", "slogan", "demonstrator", "sitin",
    ),
    "task-rocket": (
        "rocket", "launch", "countdown", "booster", "orbit", "payload", "engine",
        "liftoff", "gantry", "thruster", "stage", "telemetry",
    ),
}

BACKGROUND_VOCAB: tuple[str, ...] = (
    "anchor", "studio", "desk", "report", "street", "city", "night", "morning",
    "interview", "camera", "crew", "traffic", "market", "shop", "river", "bridge",
    "office", "meeting", "speech", "podium", "flag", "building", "window", "door",
    "car", "bus", "train", "station", "airport", "plane", "field", "farm",
    "school", "children", "teacher", "hospital", "doctor", "nurse", "police",
    "fire", "park", "tree", "garden", "beach", "boat", "harbor", "mountain",
    "valley", "road", "highway", "tunnel", "crossing", "signal", "map", "chart",
    "graph", "screen", "monitor", "keyboard", "phone", "radio", "music", "band",
    "stage", "audience", "ticket", "queue", "counter", "kitchen", "restaurant",
    "food", "plate", "table", "chair", "lamp", "wall", "ceiling", "floor",
    "stairs", "elevator", "lobby", "hall", "garage", "yard", "fence", "gate",
    "tower", "clock", "bell", "fountain", "statue", "museum", "library", "book",
    "paper", "pen", "notebook", "bag", "coat", "umbrella", "snow", "summer",
)


@dataclass(frozen=True)
class TaskSpec:
    """One simulated search task: find shots about the topic."""

    task_id: str
    terms: tuple[str, ...]
    queries: tuple[str, ...]  # starter pool; the simulator also composes its own


@dataclass(frozen=True)
class ToyCollection:
    corpus: Corpus
    qrels: Qrels
    tasks: tuple[TaskSpec, ...]


NUM_VIDEOS = 100
SHOTS_PER_VIDEO = 40
HOME_VIDEOS_PER_TASK = 20
RELEVANT_PER_HOME_VIDEO = 6
DISTRACTORS_PER_TASK = 400


def _shot_id(video_id: str, seq: int) -> str:
    return f"{video_id}_s{seq:03d}"


def _background_text(rng: random.Random, length: int) -> list[str]:
    return rng.sample(BACKGROUND_VOCAB, length)


def _relevant_text(rng: random.Random, terms: tuple[str, ...]) -> list[str]:
    # two topic terms, single occurrence each: the text undersells the content
    words = rng.sample(terms, 2) + _background_text(rng, 7)
    rng.shuffle(words)
    return words


def _distractor_text(rng: random.Random, terms: tuple[str, ...]) -> list[str]:
    # one topic term, mentioned twice: text search overrates these
    term = rng.choice(terms)
    words = [term, term] + _background_text(rng, 7)
    rng.shuffle(words)
    return words


def _query_pool(rng: random.Random, terms: tuple[str, ...]) -> tuple[str, ...]:
    singles = list(terms)
    pairs = []
    for i in range(len(terms)):
        for j in range(i + 1, len(terms)):
            pairs.append(f"{terms[i]} {terms[j]}")
    rng.shuffle(pairs)
    return tuple(singles + pairs[:12])


def build_toy_collection(seed: int = 7) -> ToyCollection:
    """Build the corpus, ground truth, and task specs for one seed."""
    rng = random.Random(seed)
    video_ids = [f"v{i:03d}" for i in range(NUM_VIDEOS)]
    # slot -> text, None while unassigned
    texts: dict[tuple[str, int], list[str] | None] = {
        (v, s): None for v in video_ids for s in range(SHOTS_PER_VIDEO)
    }
    qrels: Qrels = {}
    tasks = []

    task_ids = sorted(TOPIC_TERMS)
    homes = rng.sample(video_ids, HOME_VIDEOS_PER_TASK * len(task_ids))
    for t_index, task_id in enumerate(task_ids):
        terms = TOPIC_TERMS[task_id]
        relevant: set[str] = set()
        task_homes = homes[t_index * HOME_VIDEOS_PER_TASK:(t_index + 1) * HOME_VIDEOS_PER_TASK]
        for video_id in task_homes:
            # two runs of three consecutive relevant shots per home video
            starts = rng.sample(range(0, SHOTS_PER_VIDEO - 3), 2)
            while abs(starts[0] - starts[1]) < 4:
                starts = rng.sample(range(0, SHOTS_PER_VIDEO - 3), 2)
            for start in starts:
                for seq in range(start, start + 3):
                    texts[(video_id, seq)] = _relevant_text(rng, terms)
                    relevant.add(_shot_id(video_id, seq))
        assert len(relevant) == HOME_VIDEOS_PER_TASK * RELEVANT_PER_HOME_VIDEO
        qrels[task_id] = relevant
        tasks.append(TaskSpec(task_id=task_id, terms=terms, queries=_query_pool(rng, terms)))

    for task_id in task_ids:
        terms = TOPIC_TERMS[task_id]
        free = sorted(slot for slot, text in texts.items() if text is None)
        for slot in rng.sample(free, DISTRACTORS_PER_TASK):
            texts[slot] = _distractor_text(rng, terms)

    for slot in sorted(texts):
        if texts[slot] is None:
            texts[slot] = _background_text(rng, 9)

    records = []
    for video_id in video_ids:
        for seq in range(SHOTS_PER_VIDEO):
            words = texts[(video_id, seq)]
            assert words is not None
            shot_id = _shot_id(video_id, seq)
            records.append(
                ShotRecord(
                    shot_id=shot_id,
                    video_id=video_id,
                    seq_index=seq,
                    text=" ".join(words),
                    keyframe_ref=f"kf/{shot_id}.jpg",
                )
            )
    return ToyCollection(corpus=Corpus(records), qrels=qrels, tasks=tuple(tasks))
