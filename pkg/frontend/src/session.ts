import type {
  DocumentRecommendation,
  QueryRecommendation,
  Recommendations,
  RelevanceLevel,
  Scheduler,
  SearchResult,
  ShotRecord,
} from "./types.js";
import { MARK_ACTIONS } from "./types.js";
import type { Api } from "./api.js";
import { EventBuffer } from "./eventlog.js";

export type TabName =
  | "results"
  | "relevant"
  | "maybe"
  | "not_relevant"
  | "past_recommendations";

const LEVEL_TABS: Record<RelevanceLevel, TabName> = {
  relevant: "relevant",
  maybe: "maybe",
  not_relevant: "not_relevant",
};

const TOOLTIP_DEBOUNCE_MS = 300;

export interface SessionObserver {
  onResults?(results: SearchResult[]): void;
  onRecommendations?(recs: Recommendations): void;
  onTabsChanged?(): void;
  onError?(message: string): void;
}

interface PendingHover {
  shotId: string;
  over: boolean;
  timer: number;
}

/**
 * One user's live search session: issues queries, tracks the five tabs,
 * debounces hover tooltips, and turns every interaction into exactly one
 * buffered ActionEvent. No DOM access; the view layer subscribes.
 */
export class UiSession {
  readonly buffer: EventBuffer;
  results: SearchResult[] = [];
  recommendations: Recommendations = { documents: [], queries: [] };
  /** everything ever recommended, in presentation order, for the history tab */
  pastRecommendations: DocumentRecommendation[] = [];
  pastQueryRecommendations: QueryRecommendation[] = [];
  private marks = new Map<string, RelevanceLevel>();
  private hover: PendingHover | null = null;
  lastValidationError: string | null = null;

  constructor(
    readonly sessionId: string,
    readonly userId: string,
    private readonly client: Api,
    private readonly clock: Scheduler,
    private readonly observer: SessionObserver = {},
  ) {
    this.buffer = new EventBuffer(sessionId, userId, client, clock, {
      onError: (message) => this.observer.onError?.(message),
    });
  }

  /** Search, emit the Query event, then refresh both recommendation lists. */
  async issueQuery(text: string): Promise<boolean> {
    const trimmed = text.trim();
    if (!trimmed) {
      this.lastValidationError = "enter a query first";
      return false;
    }
    this.lastValidationError = null;
    this.buffer.emit("Query", trimmed);
    void this.buffer.flush();
    try {
      this.results = await this.client.search(trimmed);
      this.observer.onResults?.(this.results);
    } catch (err) {
      this.observer.onError?.(err instanceof Error ? err.message : String(err));
      return false;
    }
    await this.refreshRecommendations();
    return true;
  }

  /** Recommendation fetches must never block or break the search flow. */
  async refreshRecommendations(): Promise<void> {
    try {
      const recs = await this.client.recommendations(this.sessionId);
      this.recommendations = recs;
      this.pastRecommendations.push(...recs.documents);
      this.pastQueryRecommendations.push(...recs.queries);
      this.observer.onRecommendations?.(recs);
    } catch {
      this.recommendations = { documents: [], queries: [] };
      this.observer.onRecommendations?.(this.recommendations);
    }
  }

  viewShot(shotId: string): void {
    this.buffer.emit("View", shotId);
    void this.buffer.flush();
  }

  /**
   * Debounced keyframe hover: one Tooltip per continuous hover, where
   * leaving and re-entering the same shot within the window still counts
   * as the same hover. A glance shorter than the window emits nothing.
   */
  hoverKeyframe(shotId: string): void {
    if (this.hover && this.hover.shotId === shotId) {
      this.hover.over = true;
      return;
    }
    if (this.hover) {
      this.clock.cancel(this.hover.timer);
    }
    const pending: PendingHover = { shotId, over: true, timer: 0 };
    pending.timer = this.clock.schedule(() => {
      if (this.hover === pending && pending.over) {
        this.buffer.emit("Tooltip", shotId);
        void this.buffer.flush();
      }
      if (this.hover === pending) {
        this.hover = null;
      }
    }, TOOLTIP_DEBOUNCE_MS);
    this.hover = pending;
  }

  leaveKeyframe(shotId: string): void {
    if (this.hover && this.hover.shotId === shotId) {
      this.hover.over = false;
    }
  }

  /** Slider movement: the shot moves to the matching tab and one Mark* posts. */
  setRelevance(shotId: string, level: RelevanceLevel): void {
    this.marks.set(shotId, level);
    this.buffer.emit(MARK_ACTIONS[level], shotId);
    void this.buffer.flush();
    this.observer.onTabsChanged?.();
  }

  relevanceOf(shotId: string): RelevanceLevel | undefined {
    return this.marks.get(shotId);
  }

  /** Tab membership; a marked shot lives in exactly one relevance tab. */
  tabContents(tab: TabName): ShotRecord[] {
    const known = new Map<string, ShotRecord>();
    for (const record of this.results) known.set(record.shot_id, record);
    for (const rec of this.pastRecommendations) {
      if (!known.has(rec.shot_id)) {
        known.set(rec.shot_id, {
          shot_id: rec.shot_id,
          video_id: rec.video_id ?? "",
          seq_index: 0,
          text: rec.text ?? "",
          keyframe_ref: rec.keyframe_ref ?? "",
        });
      }
    }
    if (tab === "results") {
      return this.results.filter((r) => !this.marks.has(r.shot_id));
    }
    if (tab === "past_recommendations") {
      return this.pastRecommendations.map((rec) => known.get(rec.shot_id)!);
    }
    const wanted = (Object.keys(LEVEL_TABS) as RelevanceLevel[]).find(
      (level) => LEVEL_TABS[level] === tab,
    )!;
    const out: ShotRecord[] = [];
    for (const [shotId, level] of this.marks) {
      if (level === wanted && known.has(shotId)) out.push(known.get(shotId)!);
    }
    return out;
  }
}
