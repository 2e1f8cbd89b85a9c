import type { ActionEvent, ActionType, Scheduler } from "./types.js";
import type { Api } from "./api.js";

export interface BufferCallbacks {
  onFlushed?(events: ActionEvent[]): void;
  onError?(message: string): void;
}

/**
 * Builds and ships ActionEvents. Every interaction appends exactly one event;
 * flushing is sequential with at most one in-flight request, and a failed
 * batch stays buffered (in order) for retry.
 */
export class EventBuffer {
  private pending: ActionEvent[] = [];
  private draining: Promise<boolean> | null = null;
  private counter = 0;
  private lastTimestamp = 0;

  constructor(
    readonly sessionId: string,
    readonly userId: string,
    private readonly client: Api,
    private readonly clock: Scheduler,
    private readonly callbacks: BufferCallbacks = {},
  ) {}

  /** Timestamps must be non-decreasing within a session; clamp clock hiccups. */
  private nextTimestamp(): number {
    const now = Math.max(this.clock.now(), this.lastTimestamp);
    this.lastTimestamp = now;
    return now;
  }

  emit(action: ActionType, target: string, durationMs?: number): ActionEvent {
    this.counter += 1;
    const event: ActionEvent = {
      event_id: `${this.sessionId}-e${String(this.counter).padStart(4, "0")}`,
      session_id: this.sessionId,
      user_id: this.userId,
      timestamp_ms: this.nextTimestamp(),
      action,
      target,
    };
    if (action === "Play") {
      event.duration_ms = Math.max(0, Math.round(durationMs ?? 0));
    }
    this.pending.push(event);
    return event;
  }

  get pendingEvents(): readonly ActionEvent[] {
    return this.pending;
  }

  get pendingCount(): number {
    return this.pending.length;
  }

  /**
   * Push everything buffered; resolves true once the buffer has drained.
   * Calling while a drain is running joins it rather than racing it, so
   * there is never more than one request in flight.
   */
  flush(): Promise<boolean> {
    this.draining ??= this.drainLoop().finally(() => {
      this.draining = null;
    });
    return this.draining;
  }

  private async drainLoop(): Promise<boolean> {
    while (this.pending.length > 0) {
      const batch = this.pending.slice();
      try {
        await this.client.postEvents(batch);
      } catch (err) {
        this.callbacks.onError?.(err instanceof Error ? err.message : String(err));
        return false;
      }
      // events emitted while the request was in flight stay queued
      this.pending = this.pending.slice(batch.length);
      this.callbacks.onFlushed?.(batch);
    }
    return true;
  }
}
