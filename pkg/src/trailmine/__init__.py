"""Mining aggregated search trails to recommend queries and video shots.

Past sessions' queries and document interactions are folded into one
weighted directed graph; live sessions are scored against it by spreading
activation so the system can suggest shots other searchers went on to
find, plus reformulations of their queries.
"""

from .events import (
    ActionEvent,
    ActionType,
    EventError,
    LogFormatError,
    Session,
    WeightTable,
    action_weight,
    event_from_dict,
    event_to_dict,
    event_to_json_line,
    parse_event_log,
    read_event_log,
    serialize_event_log,
    sessionize,
)
from .graph import (
    GraphError,
    GraphStats,
    NodeKind,
    SnapshotError,
    TrailBuilder,
    TrailGraph,
    add_session,
    build_graph,
    document_node_id,
    interaction_value,
    load,
    merge,
    node_kind,
    normalize_query,
    query_node_id,
    read_snapshot,
    snapshot,
    write_snapshot,
)
from .recommend import (
    PathGuardError,
    RecommendError,
    RecParams,
    Recommendation,
    SessionState,
    activate,
    mark_shown,
    oracle_path_scores,
    recommend_documents,
    recommend_queries,
    seed_weights,
    update_state,
)
from .retrieval import (
    Corpus,
    CorpusError,
    SearchError,
    SearchIndex,
    ShotRecord,
    UnknownShotError,
    build_index,
    load_corpus,
    neighbors,
    read_corpus,
    serialize_corpus,
    tokenize,
)
from .evaluation import (
    CurveBin,
    EvaluationError,
    MetricsReport,
    RunRecord,
    TaskMetrics,
    average_precision,
    build_metrics_report,
    curve_spearman,
    load_qrels,
    mean_average_precision,
    precision_at_n,
    read_qrels,
    relevance_probability_curve,
    serialize_qrels,
    time_to_first_relevant,
)
from .simulate import (
    SimConfig,
    SimOutcome,
    SimulationError,
    action_mix,
    generate_session,
    run_experiment,
    unique_query_fraction,
)
from .toydata import TaskSpec, ToyCollection, build_toy_collection
from .service import ServiceConfig, create_app

__version__ = "0.1.0"

__all__ = [
    "ActionEvent",
    "ActionType",
    "Corpus",
    "CorpusError",
    "CurveBin",
    "EvaluationError",
    "EventError",
    "GraphError",
    "GraphStats",
    "LogFormatError",
    "MetricsReport",
    "NodeKind",
    "PathGuardError",
    "RecParams",
    "Recommendation",
    "RecommendError",
    "RunRecord",
    "SearchError",
    "SearchIndex",
    "ServiceConfig",
    "Session",
    "SessionState",
    "ShotRecord",
    "SimConfig",
    "SimOutcome",
    "SimulationError",
    "SnapshotError",
    "TaskMetrics",
    "TaskSpec",
    "ToyCollection",
    "TrailBuilder",
    "TrailGraph",
    "UnknownShotError",
    "WeightTable",
    "action_mix",
    "action_weight",
    "activate",
    "add_session",
    "average_precision",
    "build_graph",
    "build_index",
    "build_metrics_report",
    "build_toy_collection",
    "create_app",
    "curve_spearman",
    "document_node_id",
    "event_from_dict",
    "event_to_dict",
    "event_to_json_line",
    "generate_session",
    "interaction_value",
    "load",
    "load_corpus",
    "load_qrels",
    "mark_shown",
    "mean_average_precision",
    "merge",
    "neighbors",
    "node_kind",
    "normalize_query",
    "oracle_path_scores",
    "parse_event_log",
    "precision_at_n",
    "query_node_id",
    "read_corpus",
    "read_event_log",
    "read_qrels",
    "read_snapshot",
    "recommend_documents",
    "recommend_queries",
    "relevance_probability_curve",
    "run_experiment",
    "seed_weights",
    "serialize_corpus",
    "serialize_event_log",
    "serialize_qrels",
    "sessionize",
    "snapshot",
    "time_to_first_relevant",
    "unique_query_fraction",
    "update_state",
    "write_snapshot",
]
