"""Text search over the shot-metadata corpus, plus shot-neighborhood lookup.

Ranking formula (documented here, tested against a hand-computed table):

- tokens: lowercased, whitespace-split; no stemming or stopword removal
- ``idf(t) = ln((1 + N) / (1 + df(t))) + 1``
- document term weight ``w(t, d) = tf(t, d) * idf(t)``
- ``score(q, d) = sum_t qtf(t) * w(t, d) / ||w(., d)||_2``

where ``qtf`` counts the term in the query and the denominator is the L2
norm of the document's full term-weight vector (cosine-style length
normalization). Only documents sharing at least one query term are returned;
ties break by shot_id ascending.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable


class CorpusError(ValueError):
    pass


class SearchError(ValueError):
    pass


class UnknownShotError(KeyError):
    pass


SHOT_FIELDS = ("shot_id", "video_id", "seq_index", "text", "keyframe_ref")


@dataclass(frozen=True)
class ShotRecord:
    """One retrieval unit: a video shot with its transcript text and keyframe."""

    shot_id: str
    video_id: str
    seq_index: int
    text: str
    keyframe_ref: str

    def __post_init__(self) -> None:
        if not self.shot_id or any(c.isspace() for c in self.shot_id):
            raise CorpusError(f"invalid shot_id {self.shot_id!r}")
        if not self.video_id:
            raise CorpusError(f"shot {self.shot_id}: video_id must be non-empty")
        if isinstance(self.seq_index, bool) or not isinstance(self.seq_index, int) or self.seq_index < 0:
            raise CorpusError(f"shot {self.shot_id}: seq_index must be an integer >= 0")
        if not isinstance(self.text, str):
            raise CorpusError(f"shot {self.shot_id}: text must be a string")
        if not isinstance(self.keyframe_ref, str):
            raise CorpusError(f"shot {self.shot_id}: keyframe_ref must be a string")

    def to_dict(self) -> dict:
        return {
            "shot_id": self.shot_id,
            "video_id": self.video_id,
            "seq_index": self.seq_index,
            "text": self.text,
            "keyframe_ref": self.keyframe_ref,
        }


def tokenize(text: str) -> list[str]:
    return text.lower().split()


class Corpus:
    """Immutable shot collection with id and per-video indexes."""

    def __init__(self, records: Iterable[ShotRecord]) -> None:
        self.records: list[ShotRecord] = list(records)
        self.by_id: dict[str, ShotRecord] = {}
        self._by_video: dict[str, list[ShotRecord]] = {}
        seen_positions: set[tuple[str, int]] = set()
        for record in self.records:
            if record.shot_id in self.by_id:
                raise CorpusError(f"duplicate shot_id {record.shot_id!r}")
            position = (record.video_id, record.seq_index)
            if position in seen_positions:
                raise CorpusError(
                    f"duplicate position {position!r} (shot {record.shot_id})"
                )
            seen_positions.add(position)
            self.by_id[record.shot_id] = record
            self._by_video.setdefault(record.video_id, []).append(record)
        for shots in self._by_video.values():
            shots.sort(key=lambda r: r.seq_index)

    def __len__(self) -> int:
        return len(self.records)

    def video_shots(self, video_id: str) -> list[ShotRecord]:
        return list(self._by_video.get(video_id, []))


def load_corpus(data: bytes | str) -> Corpus:
    """Parse the JSON Lines corpus format; errors name the offending line."""
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    records: list[ShotRecord] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorpusError(f"line {lineno}: invalid JSON: {exc.msg}") from exc
        if not isinstance(raw, dict) or set(raw) != set(SHOT_FIELDS):
            raise CorpusError(f"line {lineno}: expected exactly the fields {SHOT_FIELDS}")
        try:
            records.append(ShotRecord(**raw))
        except CorpusError as exc:
            raise CorpusError(f"line {lineno}: {exc}") from exc
    return Corpus(records)


def serialize_corpus(corpus: Corpus) -> bytes:
    lines = (json.dumps(r.to_dict(), separators=(",", ":")) for r in corpus.records)
    return "".join(line + "\n" for line in lines).encode("utf-8")


def read_corpus(path: str | Path) -> Corpus:
    return load_corpus(Path(path).read_bytes())


class SearchIndex:
    """Inverted index over shot text; immutable after construction."""

    def __init__(self, corpus: Corpus) -> None:
        self.corpus = corpus
        self.postings: dict[str, list[tuple[str, int]]] = {}
        self.doc_freq: dict[str, int] = {}
        self._doc_norm: dict[str, float] = {}
        self.n_docs = len(corpus)
        term_counts: dict[str, dict[str, int]] = {}
        for record in corpus.records:
            counts: dict[str, int] = {}
            for term in tokenize(record.text):
                counts[term] = counts.get(term, 0) + 1
            term_counts[record.shot_id] = counts
            for term, tf in counts.items():
                self.postings.setdefault(term, []).append((record.shot_id, tf))
                self.doc_freq[term] = self.doc_freq.get(term, 0) + 1
        for shot_id, counts in term_counts.items():
            norm_sq = sum((tf * self.idf(term)) ** 2 for term, tf in counts.items())
            self._doc_norm[shot_id] = math.sqrt(norm_sq)

    def idf(self, term: str) -> float:
        df = self.doc_freq.get(term, 0)
        return math.log((1 + self.n_docs) / (1 + df)) + 1.0

    def search(self, query: str, k: int) -> list[tuple[str, float]]:
        """Ranked (shot_id, score) for the query; at most k results.

        Any-term match: every returned shot contains at least one query term.
        Queries with no indexed term return an empty list; blank queries are
        an error.
        """
        if k < 1:
            raise SearchError("k must be >= 1")
        terms = tokenize(query)
        if not terms:
            raise SearchError("query must not be blank")
        query_tf: dict[str, int] = {}
        for term in terms:
            query_tf[term] = query_tf.get(term, 0) + 1
        scores: dict[str, float] = {}
        for term, qtf in query_tf.items():
            postings = self.postings.get(term)
            if not postings:
                continue
            idf = self.idf(term)
            for shot_id, tf in postings:
                scores[shot_id] = scores.get(shot_id, 0.0) + qtf * tf * idf
        ranked = [
            (shot_id, score / self._doc_norm[shot_id]) for shot_id, score in scores.items()
        ]
        ranked.sort(key=lambda item: (-item[1], item[0]))
        return ranked[:k]


def build_index(corpus: Corpus) -> SearchIndex:
    return SearchIndex(corpus)


def neighbors(corpus: Corpus, shot_id: str, radius: int) -> list[ShotRecord]:
    """Shots of the same video within ``radius`` positions, excluding self."""
    if radius < 1:
        raise SearchError("radius must be >= 1")
    record = corpus.by_id.get(shot_id)
    if record is None:
        raise UnknownShotError(shot_id)
    return [
        other
        for other in corpus.video_shots(record.video_id)
        if other.shot_id != shot_id and abs(other.seq_index - record.seq_index) <= radius
    ]
