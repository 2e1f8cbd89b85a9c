"""Synthetic searcher populations over the toy corpus.

Each simulated user works through timed search tasks, producing event
streams whose action-type proportions track a configurable target mix.
Users are run in waves: the first wave searches without recommendations
and seeds the trail graph; later waves run each user on each task twice,
once baseline and once with live recommendations, so the two conditions
can be compared on the same population.

The behavior model is deliberately simple. Users sample an action type,
pick a target shot with extra affinity for truly relevant ones, form a
noisy private belief about each shot on first contact, and mark according
to that belief. Recommendations, when followed, inject their targets into
the user's candidate pool, which is the entire mechanism by which the
recommend condition can outperform the baseline.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field
from typing import Iterable, Literal, Mapping, Sequence

from .evaluation import MetricsReport, Qrels, RunRecord, build_metrics_report
from .events import ActionEvent, ActionType, Session, WeightTable
from .graph import DOCUMENT_PREFIX, TrailGraph, add_session
from .recommend import RecParams, SessionState, mark_shown, recommend_documents, update_state
from .retrieval import Corpus, SearchIndex, neighbors
from .toydata import TaskSpec


class SimulationError(ValueError):
    pass


# Published action counts from a 24-user study log; the default calibration
# target (total 23559).
TABLE1_COUNTS: dict[ActionType, int] = {
    ActionType.QUERY: 1083,
    ActionType.MARK_RELEVANT: 1343,
    ActionType.MARK_MAYBE_RELEVANT: 176,
    ActionType.MARK_NOT_RELEVANT: 922,
    ActionType.VIEW: 3034,
    ActionType.PLAY: 7598,
    ActionType.BROWSE_KEYFRAMES: 814,
    ActionType.NAVIGATE_WITHIN: 3794,
    ActionType.TOOLTIP: 4795,
}

DEFAULT_ACTION_MIX: dict[ActionType, float] = {
    action: count / sum(TABLE1_COUNTS.values()) for action, count in TABLE1_COUNTS.items()
}

# Fixed simulated epoch so generated logs are byte-stable.
EPOCH_MS = 1_400_000_000_000

Mode = Literal["baseline", "recommend"]

_MARKS = (ActionType.MARK_RELEVANT, ActionType.MARK_MAYBE_RELEVANT, ActionType.MARK_NOT_RELEVANT)


@dataclass(frozen=True)
class SimConfig:
    rng_seed: int
    tasks: tuple[TaskSpec, ...]
    num_users: int = 24
    session_budget_s: int = 900
    action_mix: Mapping[ActionType, float] = field(
        default_factory=lambda: dict(DEFAULT_ACTION_MIX)
    )
    relevance_affinity: float = 2.5
    recommendation_follow_prob: float = 0.5
    judgment_noise: float = 0.1
    query_repeat_prob: float = 0.36
    short_play_fraction: float = 0.1
    wave_size: int = 4
    rec_params: RecParams = RecParams(k=5)
    per_task_graphs: bool = False

    def __post_init__(self) -> None:
        if not self.tasks:
            raise SimulationError("at least one task is required")
        if self.num_users < 1:
            raise SimulationError("num_users must be >= 1")
        # budget 0 is allowed to express the degenerate one-query session
        if self.session_budget_s < 0:
            raise SimulationError("session_budget_s must be >= 0")
        if set(self.action_mix) != set(ActionType):
            raise SimulationError("action_mix must cover every action type")
        if any(p < 0 for p in self.action_mix.values()):
            raise SimulationError("action_mix proportions must be >= 0")
        if abs(sum(self.action_mix.values()) - 1.0) > 1e-9:
            raise SimulationError("action_mix proportions must sum to 1")
        if not self.relevance_affinity > 1:
            raise SimulationError("relevance_affinity must be > 1")
        for name in ("recommendation_follow_prob", "judgment_noise",
                     "query_repeat_prob", "short_play_fraction"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise SimulationError(f"{name} must be in [0, 1]")
        if self.wave_size < 1:
            raise SimulationError("wave_size must be >= 1")


def config_to_dict(config: SimConfig) -> dict:
    return {
        "rng_seed": config.rng_seed,
        "num_users": config.num_users,
        "session_budget_s": config.session_budget_s,
        "action_mix": {a.value: p for a, p in sorted(config.action_mix.items(), key=lambda i: i[0].value)},
        "relevance_affinity": config.relevance_affinity,
        "recommendation_follow_prob": config.recommendation_follow_prob,
        "judgment_noise": config.judgment_noise,
        "query_repeat_prob": config.query_repeat_prob,
        "short_play_fraction": config.short_play_fraction,
        "wave_size": config.wave_size,
        "per_task_graphs": config.per_task_graphs,
        "rec_params": {
            "depth": config.rec_params.depth,
            "damping": config.rec_params.damping,
            "recency_decay": config.rec_params.recency_decay,
            "k": config.rec_params.k,
        },
        "tasks": [
            {"task_id": t.task_id, "terms": list(t.terms), "queries": list(t.queries)}
            for t in config.tasks
        ],
    }


def config_from_dict(raw: Mapping, default_tasks: Sequence[TaskSpec] = ()) -> SimConfig:
    """Build a SimConfig from parsed JSON; unknown keys are rejected."""
    known = {
        "rng_seed", "num_users", "session_budget_s", "action_mix", "relevance_affinity",
        "recommendation_follow_prob", "judgment_noise", "query_repeat_prob",
        "short_play_fraction", "wave_size", "per_task_graphs", "rec_params", "tasks",
    }
    unknown = set(raw) - known
    if unknown:
        raise SimulationError(f"unknown config keys: {sorted(unknown)}")
    if "rng_seed" not in raw:
        raise SimulationError("rng_seed is required")
    kwargs: dict = {"rng_seed": raw["rng_seed"]}
    for key in ("num_users", "session_budget_s", "relevance_affinity",
                "recommendation_follow_prob", "judgment_noise", "query_repeat_prob",
                "short_play_fraction", "wave_size", "per_task_graphs"):
        if key in raw:
            kwargs[key] = raw[key]
    if "action_mix" in raw:
        try:
            kwargs["action_mix"] = {ActionType(name): p for name, p in raw["action_mix"].items()}
        except ValueError as exc:
            raise SimulationError(f"bad action_mix: {exc}") from exc
    if "rec_params" in raw:
        kwargs["rec_params"] = RecParams(**raw["rec_params"])
    if "tasks" in raw:
        kwargs["tasks"] = tuple(
            TaskSpec(task_id=t["task_id"], terms=tuple(t["terms"]), queries=tuple(t["queries"]))
            for t in raw["tasks"]
        )
    else:
        if not default_tasks:
            raise SimulationError("config has no tasks and no defaults were supplied")
        kwargs["tasks"] = tuple(default_tasks)
    return SimConfig(**kwargs)


@dataclass
class QueryLog:
    """Query history shared across sessions, so users repeat each other."""

    issued: dict[str, list[str]] = field(default_factory=dict)
    seen: dict[str, set[str]] = field(default_factory=dict)

    def record(self, task_id: str, query: str) -> None:
        self.issued.setdefault(task_id, []).append(query)
        self.seen.setdefault(task_id, set()).add(query)


def _session_seed(rng_seed: int, session_id: str) -> int:
    digest = hashlib.sha256(f"{rng_seed}|{session_id}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def _next_query(rng: random.Random, task: TaskSpec, log: QueryLog, repeat_prob: float) -> str:
    issued = log.issued.get(task.task_id, [])
    if issued and rng.random() < repeat_prob:
        return rng.choice(issued)
    seen = log.seen.get(task.task_id, set())
    query = task.queries[0]
    for _ in range(6):
        length = rng.choices([1, 2, 3], weights=[0.50, 0.40, 0.10])[0]
        query = " ".join(rng.sample(task.terms, length))
        if query not in seen:
            break
    return query


def _pick_shot(
    rng: random.Random,
    pool: Sequence[str],
    truth: set[str],
    affinity: float,
    examined: Mapping[str, bool],
    engage: bool = False,
) -> str:
    """Affinity-weighted choice. Screening picks (engage=False) prefer fresh
    material; engagement picks (plays) favor shots the user already judged
    promising and avoid ones already judged junk."""
    weights = []
    for shot_id in pool:
        w = affinity if shot_id in truth else 1.0
        believed = examined.get(shot_id)
        if engage:
            if believed is True:
                w *= 3.0
            elif believed is False:
                w *= 0.15
        elif believed is not None:
            w *= 0.2
        weights.append(w)
    return rng.choices(pool, weights=weights, k=1)[0]


class _UserSim:
    """Single-session behavior loop; everything flows from one seeded RNG."""

    RESULTS_PER_QUERY = 30
    NAVIGATE_RADIUS = 2
    REC_EVERY = 25
    MAX_EVENTS = 2000

    def __init__(
        self,
        corpus: Corpus,
        index: SearchIndex,
        truth: set[str],
        graph: TrailGraph | None,
        mode: Mode,
        config: SimConfig,
        task: TaskSpec,
        session_id: str,
        user_id: str,
        query_log: QueryLog,
        start_ms: int,
    ) -> None:
        self.corpus = corpus
        self.index = index
        self.truth = truth
        self.graph = graph
        self.mode = mode
        self.config = config
        self.task = task
        self.session_id = session_id
        self.user_id = user_id
        self.query_log = query_log
        self.start_ms = start_ms
        self.rng = random.Random(_session_seed(config.rng_seed, session_id))
        self.table = WeightTable.default()

        self.events: list[ActionEvent] = []
        self.clock_s = 0.0
        self.result_list: list[str] = []
        self.followed_recs: list[str] = []
        self.examined: dict[str, bool] = {}  # shot -> private relevance belief
        self.marked: set[str] = set()
        self.selected: list[str] = []  # MarkRelevant targets, in mark order
        self.presented: list[str] = []  # system-surfaced shots, in order
        self.last_shot: str | None = None
        self.last_good: str | None = None  # most recent shot believed relevant
        self.state = SessionState(session_id=session_id)

    # -- event plumbing -------------------------------------------------

    def _emit(self, action: ActionType, target: str, duration_ms: int | None, cost_s: float) -> None:
        event = ActionEvent(
            event_id=f"{self.session_id}-e{len(self.events):04d}",
            session_id=self.session_id,
            user_id=self.user_id,
            timestamp_ms=self.start_ms + int(self.clock_s * 1000),
            action=action,
            target=target,
            duration_ms=duration_ms,
            task_id=self.task.task_id,
        )
        self.events.append(event)
        self.clock_s += cost_s
        if self.mode == "recommend":
            update_state(self.state, event, self.table)

    def _examine(self, shot_id: str) -> None:
        if shot_id not in self.examined:
            wrong = self.rng.random() < self.config.judgment_noise
            self.examined[shot_id] = (shot_id in self.truth) != wrong
        self.last_shot = shot_id
        if self.examined[shot_id]:
            self.last_good = shot_id
        if shot_id in self.followed_recs:
            self.followed_recs.remove(shot_id)

    # -- recommendations -------------------------------------------------

    def _fetch_recommendations(self) -> None:
        if self.mode != "recommend" or self.graph is None:
            return
        recs = recommend_documents(self.graph, self.state, self.config.rec_params)
        mark_shown(self.state, recs)
        for rec in recs:
            shot_id = rec.node_id[len(DOCUMENT_PREFIX):]
            if shot_id not in self.corpus.by_id:
                continue
            self.presented.append(shot_id)
            if self.rng.random() < self.config.recommendation_follow_prob:
                self.followed_recs.append(shot_id)

    # -- actions ----------------------------------------------------------

    def _do_query(self) -> None:
        query = _next_query(self.rng, self.task, self.query_log, self.config.query_repeat_prob)
        self.query_log.record(self.task.task_id, query)
        self._emit(ActionType.QUERY, query, None, self.rng.uniform(8.0, 16.0))
        hits = self.index.search(query, self.RESULTS_PER_QUERY)
        self.result_list = [shot_id for shot_id, _ in hits]
        self.presented.extend(self.result_list)
        self._fetch_recommendations()

    def _candidates(self) -> list[str]:
        return self.followed_recs + self.result_list

    def _target_for_browse(self, engage: bool = False) -> str | None:
        # followed recommendations take priority; they are why the user followed
        if self.followed_recs and self.rng.random() < 0.8:
            return self.followed_recs[0]
        pool = self._candidates()
        if engage:
            # replays draw on everything judged promising so far, too
            pool = pool + [s for s, believed in self.examined.items() if believed]
        if not pool:
            return None
        return _pick_shot(
            self.rng, pool, self.truth, self.config.relevance_affinity, self.examined, engage
        )

    def _do_view(self) -> bool:
        target = self._target_for_browse()
        if target is None:
            return False
        self._examine(target)
        self._emit(ActionType.VIEW, target, None, self.rng.uniform(3.0, 7.0))
        return True

    def _do_play(self) -> bool:
        target = self._target_for_browse(engage=True)
        if target is None:
            return False
        self._examine(target)
        if self.rng.random() < self.config.short_play_fraction:
            duration_ms = self.rng.randint(500, 2900)
        else:
            duration_ms = self.rng.randint(3500, 18000)
        self._emit(
            ActionType.PLAY, target, duration_ms,
            duration_ms / 1000.0 + self.rng.uniform(0.5, 2.5),
        )
        return True

    def _do_tooltip(self) -> bool:
        target = self._target_for_browse()
        if target is None:
            return False
        self._examine(target)
        self._emit(ActionType.TOOLTIP, target, None, self.rng.uniform(1.0, 2.5))
        return True

    def _do_browse(self) -> bool:
        target = self._target_for_browse()
        if target is None:
            return False
        self._examine(target)
        self._emit(ActionType.BROWSE_KEYFRAMES, target, None, self.rng.uniform(3.0, 6.0))
        return True

    def _do_navigate(self) -> bool:
        # dig around the most recent promising find, if there is one
        base = self.last_good if self.last_good is not None else self.last_shot
        if base is None:
            return False
        nearby = [r.shot_id for r in neighbors(self.corpus, base, self.NAVIGATE_RADIUS)]
        if not nearby:
            return False
        target = _pick_shot(self.rng, nearby, self.truth, self.config.relevance_affinity, self.examined)
        self._examine(target)
        self._emit(ActionType.NAVIGATE_WITHIN, target, None, self.rng.uniform(2.0, 5.0))
        return True

    def _mark_pool(self, action: ActionType) -> list[str]:
        if action is ActionType.MARK_RELEVANT:
            return [s for s, believed in self.examined.items() if believed and s not in self.marked]
        if action is ActionType.MARK_NOT_RELEVANT:
            return [s for s, believed in self.examined.items() if not believed and s not in self.marked]
        return [s for s in self.examined if s not in self.marked]

    def _do_mark(self, action: ActionType) -> bool:
        pool = self._mark_pool(action)
        if not pool:
            return False
        # usually judge the shot just examined, reinforcing the step that
        # led to it; otherwise clear some earlier find from the backlog
        if self.last_shot in pool and self.rng.random() < 0.6:
            target = self.last_shot
        else:
            target = self.rng.choice(pool)
        self.marked.add(target)
        if action is ActionType.MARK_RELEVANT:
            self.selected.append(target)
        self.last_shot = target
        self._emit(action, target, None, self.rng.uniform(2.0, 4.0))
        return True

    # -- main loop ---------------------------------------------------------

    def run(self) -> Session:
        actions = sorted(self.config.action_mix, key=lambda a: a.value)
        weights = [self.config.action_mix[a] for a in actions]
        budget_s = float(self.config.session_budget_s)

        self._do_query()
        while self.clock_s < budget_s and len(self.events) < self.MAX_EVENTS:
            if self.mode == "recommend" and len(self.events) % self.REC_EVERY == 0:
                self._fetch_recommendations()
            action = self.rng.choices(actions, weights=weights, k=1)[0]
            done = False
            if action is ActionType.QUERY:
                self._do_query()
                done = True
            elif action is ActionType.VIEW:
                done = self._do_view()
            elif action is ActionType.PLAY:
                done = self._do_play()
            elif action is ActionType.TOOLTIP:
                done = self._do_tooltip()
            elif action is ActionType.BROWSE_KEYFRAMES:
                done = self._do_browse()
            elif action is ActionType.NAVIGATE_WITHIN:
                done = self._do_navigate()
            elif action in _MARKS:
                done = self._do_mark(action)
            if not done:
                # structurally impossible right now; viewing is the cheap default
                if not self._do_view():
                    self._do_query()
        return Session(self.session_id, self.user_id, self.events)


def generate_session(
    corpus: Corpus,
    qrels: Qrels,
    graph: TrailGraph | None,
    mode: Mode,
    config: SimConfig,
    user_index: int,
    *,
    task_id: str | None = None,
    index: SearchIndex | None = None,
    query_log: QueryLog | None = None,
    start_ms: int = EPOCH_MS,
) -> Session:
    """Generate one seeded-deterministic session for a user on a task."""
    if mode not in ("baseline", "recommend"):
        raise SimulationError(f"unknown mode {mode!r}")
    if mode == "recommend" and graph is None:
        raise SimulationError("recommend mode requires a trail graph")
    by_id = {t.task_id: t for t in config.tasks}
    if task_id is None:
        task_id = config.tasks[0].task_id
    if task_id not in by_id:
        raise SimulationError(f"unknown task {task_id!r}")
    task = by_id[task_id]
    sim = _UserSim(
        corpus=corpus,
        index=index if index is not None else SearchIndex(corpus),
        truth=qrels.get(task_id, set()),
        graph=graph,
        mode=mode,
        config=config,
        task=task,
        session_id=f"u{user_index:03d}-{task_id}-{mode}",
        user_id=f"u{user_index:03d}",
        query_log=query_log if query_log is not None else QueryLog(),
        start_ms=start_ms,
    )
    session = sim.run()
    session.validate()
    return session


@dataclass
class SimOutcome:
    """Everything a simulated experiment produced."""

    sessions: list[Session]
    runs: list[RunRecord]
    metrics: MetricsReport  # over user-selected shots
    metrics_system: MetricsReport  # over system-surfaced shots
    graph: TrailGraph


def _wave_slices(num_users: int, wave_size: int) -> list[range]:
    return [range(lo, min(lo + wave_size, num_users)) for lo in range(0, num_users, wave_size)]


def run_experiment(corpus: Corpus, qrels: Qrels, config: SimConfig) -> SimOutcome:
    """Run the full waved experiment and compare conditions.

    Wave 0 is training: baseline only, excluded from the metrics, feeding
    the first graph. Every later wave runs each user on each task under
    both conditions against the graph as of the end of the previous wave.
    """
    if config.session_budget_s <= 0:
        raise SimulationError("run_experiment needs a positive session budget")
    index = SearchIndex(corpus)
    table = WeightTable.default()
    graphs: dict[str, TrailGraph] = {
        task.task_id: TrailGraph() for task in config.tasks
    } if config.per_task_graphs else {}
    shared = TrailGraph()
    query_log = QueryLog()
    sessions: list[Session] = []
    runs: list[RunRecord] = []
    session_counter = 0

    for wave_index, users in enumerate(_wave_slices(config.num_users, config.wave_size)):
        wave_sessions: list[tuple[Session, str]] = []
        for user_index in users:
            for task in config.tasks:
                modes: tuple[Mode, ...] = ("baseline",) if wave_index == 0 else ("baseline", "recommend")
                for mode in modes:
                    graph = graphs[task.task_id] if config.per_task_graphs else shared
                    sim = _UserSim(
                        corpus=corpus,
                        index=index,
                        truth=qrels.get(task.task_id, set()),
                        graph=graph if mode == "recommend" else None,
                        mode=mode,
                        config=config,
                        task=task,
                        session_id=f"u{user_index:03d}-{task.task_id}-{mode}",
                        user_id=f"u{user_index:03d}",
                        query_log=query_log,
                        start_ms=EPOCH_MS + session_counter * 3_600_000,
                    )
                    session = sim.run()
                    session.validate()
                    session_counter += 1
                    sessions.append(session)
                    wave_sessions.append((session, task.task_id))
                    if wave_index > 0:
                        runs.append(RunRecord(
                            session_id=session.session_id,
                            task_id=task.task_id,
                            condition=mode,
                            ranking_kind="selected",
                            ranked=tuple(sim.selected),
                        ))
                        runs.append(RunRecord(
                            session_id=session.session_id,
                            task_id=task.task_id,
                            condition=mode,
                            ranking_kind="system",
                            ranked=tuple(sim.presented),
                        ))
        # graph updates are serialized between waves
        for session, task_id in wave_sessions:
            target_graph = graphs[task_id] if config.per_task_graphs else shared
            add_session(target_graph, session, table)

    if config.per_task_graphs:
        from .graph import merge

        final = TrailGraph()
        for task in config.tasks:
            final = merge(final, graphs[task.task_id])
    else:
        final = shared

    by_id = {s.session_id: s for s in sessions}
    selected_runs = [r for r in runs if r.ranking_kind == "selected"]
    system_runs = [r for r in runs if r.ranking_kind == "system"]
    metrics = build_metrics_report(selected_runs, by_id, qrels)
    metrics_system = build_metrics_report(system_runs, by_id, qrels)
    return SimOutcome(
        sessions=sessions,
        runs=runs,
        metrics=metrics,
        metrics_system=metrics_system,
        graph=final,
    )


def action_mix(sessions: Iterable[Session]) -> dict[ActionType, float]:
    """Observed action-type proportions over every event in the sessions."""
    counts: dict[ActionType, int] = {}
    total = 0
    for session in sessions:
        for event in session.events:
            counts[event.action] = counts.get(event.action, 0) + 1
            total += 1
    if total == 0:
        raise SimulationError("no events to compute an action mix over")
    return {action: count / total for action, count in counts.items()}


def unique_query_fraction(sessions: Iterable[Session]) -> float:
    """Distinct query strings over total Query events."""
    total = 0
    seen: set[str] = set()
    for session in sessions:
        for event in session.events:
            if event.action is ActionType.QUERY:
                total += 1
                seen.add(" ".join(event.target.split()).lower())
    if total == 0:
        raise SimulationError("no Query events")
    return len(seen) / total
