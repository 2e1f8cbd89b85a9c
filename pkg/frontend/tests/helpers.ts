import type { Api } from "../src/api.js";
import type {
  ActionEvent,
  Recommendations,
  Scheduler,
  SearchResult,
  ShotDetail,
  ShotRecord,
} from "../src/types.js";

interface Timer {
  id: number;
  at: number;
  fn: () => void;
}

/** Deterministic clock + timer queue; advance() fires due timers in order. */
export class ManualScheduler implements Scheduler {
  private time = 0;
  private timers: Timer[] = [];
  private nextId = 1;

  now(): number {
    return this.time;
  }

  schedule(fn: () => void, delayMs: number): number {
    const id = this.nextId++;
    this.timers.push({ id, at: this.time + delayMs, fn });
    return id;
  }

  cancel(id: number): void {
    this.timers = this.timers.filter((t) => t.id !== id);
  }

  advance(ms: number): void {
    const target = this.time + ms;
    for (;;) {
      const due = this.timers
        .filter((t) => t.at <= target)
        .sort((a, b) => a.at - b.at || a.id - b.id)[0];
      if (!due) break;
      this.timers = this.timers.filter((t) => t.id !== due.id);
      this.time = due.at;
      due.fn();
    }
    this.time = target;
  }
}

export function shot(id: string, seq = 0, video = "v1"): ShotRecord {
  return {
    shot_id: id,
    video_id: video,
    seq_index: seq,
    text: `text for ${id}`,
    keyframe_ref: `kf/${id}.jpg`,
  };
}

/**
 * In-memory stand-in for the service. Search is canned per query;
 * recommendations follow the once-only rule the way the server does,
 * so controller tests exercise realistic request/response flows.
 */
export class FakeBackend implements Api {
  posted: ActionEvent[][] = [];
  failNextPosts = 0;
  searchResults = new Map<string, SearchResult[]>();
  recQueue: Recommendations[] = [];
  private shown = new Set<string>();

  get allEvents(): ActionEvent[] {
    return this.posted.flat();
  }

  async search(query: string): Promise<SearchResult[]> {
    return this.searchResults.get(query) ?? [];
  }

  async shotDetail(shotId: string): Promise<ShotDetail> {
    return {
      shot: shot(shotId),
      neighbors: [shot(shotId + "-prev"), shot(shotId + "-next")],
    };
  }

  async recommendations(): Promise<Recommendations> {
    const next = this.recQueue.shift() ?? { documents: [], queries: [] };
    const documents = next.documents.filter((d) => !this.shown.has(d.shot_id));
    for (const d of documents) this.shown.add(d.shot_id);
    return { documents, queries: next.queries };
  }

  async graphStats() {
    return {
      node_count: 0,
      query_node_count: 0,
      document_node_count: 0,
      edge_count: 0,
      total_weight: 0,
    };
  }

  async postEvents(batch: ActionEvent[]): Promise<number> {
    if (this.failNextPosts > 0) {
      this.failNextPosts -= 1;
      throw new Error("connection refused");
    }
    this.posted.push(batch.map((e) => ({ ...e })));
    return batch.length;
  }
}

/** Strip ids and clock readings so logs compare structurally. */
export function normalize(events: ActionEvent[]) {
  return events.map((e) => {
    const out: Record<string, unknown> = { action: e.action, target: e.target };
    if (e.duration_ms !== undefined) out.duration_ms = e.duration_ms;
    return out;
  });
}
