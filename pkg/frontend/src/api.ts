import type {
  ActionEvent,
  GraphStats,
  Recommendations,
  SearchResult,
  ShotDetail,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(message: string, readonly status: number) {
    super(message);
  }
}

/** What the controllers need from the service; tests stub this directly. */
export interface Api {
  search(query: string, k?: number): Promise<SearchResult[]>;
  shotDetail(shotId: string, radius?: number): Promise<ShotDetail>;
  recommendations(sessionId: string, k?: number): Promise<Recommendations>;
  graphStats(): Promise<GraphStats>;
  postEvents(batch: ActionEvent[]): Promise<number>;
}

/** Thin typed wrapper over the service HTTP API; fetch is injected for tests. */
export class ServiceClient implements Api {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async getJson<T>(path: string): Promise<T> {
    const resp = await this.fetchFn(this.baseUrl + path);
    if (!resp.ok) {
      throw new ApiError(`GET ${path} failed: ${resp.status}`, resp.status);
    }
    return (await resp.json()) as T;
  }

  async search(query: string, k = 30): Promise<SearchResult[]> {
    const params = new URLSearchParams({ q: query, k: String(k) });
    const body = await this.getJson<{ results: SearchResult[] }>(
      `/api/search?${params}`,
    );
    return body.results;
  }

  shotDetail(shotId: string, radius = 1): Promise<ShotDetail> {
    const params = new URLSearchParams({ radius: String(radius) });
    return this.getJson(`/api/shots/${encodeURIComponent(shotId)}?${params}`);
  }

  recommendations(sessionId: string, k = 5): Promise<Recommendations> {
    const params = new URLSearchParams({ session_id: sessionId, k: String(k) });
    return this.getJson(`/api/recommendations?${params}`);
  }

  graphStats(): Promise<GraphStats> {
    return this.getJson("/api/graph/stats");
  }

  async postEvents(batch: ActionEvent[]): Promise<number> {
    const resp = await this.fetchFn(this.baseUrl + "/api/events", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(batch),
    });
    if (!resp.ok) {
      let detail = String(resp.status);
      try {
        detail = JSON.stringify((await resp.json()).detail);
      } catch {
        // keep the status text
      }
      throw new ApiError(`event ingestion rejected: ${detail}`, resp.status);
    }
    const body = (await resp.json()) as { accepted: number };
    return body.accepted;
  }
}
