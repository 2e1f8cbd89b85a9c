// Mirrors the service's event and payload schemas.

export type ActionType =
  | "Query"
  | "MarkRelevant"
  | "MarkMaybeRelevant"
  | "MarkNotRelevant"
  | "View"
  | "Play"
  | "BrowseKeyframes"
  | "NavigateWithin"
  | "Tooltip";

export interface ActionEvent {
  event_id: string;
  session_id: string;
  user_id: string;
  timestamp_ms: number;
  action: ActionType;
  target: string;
  duration_ms?: number; // Play only
  task_id?: string;
}

export interface ShotRecord {
  shot_id: string;
  video_id: string;
  seq_index: number;
  text: string;
  keyframe_ref: string;
}

export interface SearchResult extends ShotRecord {
  score: number;
}

export interface ShotDetail {
  shot: ShotRecord;
  neighbors: ShotRecord[];
}

export interface DocumentRecommendation {
  shot_id: string;
  score: number;
  text?: string;
  keyframe_ref?: string;
  video_id?: string;
}

export interface QueryRecommendation {
  query: string;
  score: number;
}

export interface Recommendations {
  documents: DocumentRecommendation[];
  queries: QueryRecommendation[];
}

export interface GraphStats {
  node_count: number;
  query_node_count: number;
  document_node_count: number;
  edge_count: number;
  total_weight: number;
}

export type RelevanceLevel = "relevant" | "maybe" | "not_relevant";

export const MARK_ACTIONS: Record<RelevanceLevel, ActionType> = {
  relevant: "MarkRelevant",
  maybe: "MarkMaybeRelevant",
  not_relevant: "MarkNotRelevant",
};

/** Injected time/timer source so controllers are testable without real timers. */
export interface Scheduler {
  now(): number;
  schedule(fn: () => void, delayMs: number): number;
  cancel(id: number): void;
}

export const realScheduler: Scheduler = {
  now: () => Date.now(),
  schedule: (fn, delayMs) => setTimeout(fn, delayMs) as unknown as number,
  cancel: (id) => clearTimeout(id),
};
