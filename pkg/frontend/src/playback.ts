import type { Scheduler, ShotRecord } from "./types.js";
import type { EventBuffer } from "./eventlog.js";

export type PlaybackState = "idle" | "playing" | "paused";

/**
 * Playback stub over a timed keyframe sequence. Play time accumulates across
 * pause/resume and is emitted as a single Play event (true wall-clock
 * duration, even under 3 s) when the clip stops or the user moves on.
 * Skipping emits NavigateWithin; paging the keyframe strip emits
 * BrowseKeyframes.
 */
export class PlaybackController {
  state: PlaybackState = "idle";
  current: ShotRecord | null = null;
  frames: ShotRecord[] = [];
  frameIndex = 0;
  private accumulatedMs = 0;
  private segmentStart = 0;

  constructor(
    private readonly buffer: EventBuffer,
    private readonly clock: Scheduler,
  ) {}

  /** Switching shots finishes the previous play so its duration is not lost. */
  load(shot: ShotRecord, frames: ShotRecord[] = []): void {
    this.finishPlay();
    this.current = shot;
    this.frames = frames.length > 0 ? frames : [shot];
    this.frameIndex = 0;
  }

  play(): void {
    if (!this.current || this.state === "playing") return;
    this.segmentStart = this.clock.now();
    this.state = "playing";
  }

  pause(): void {
    if (this.state !== "playing") return;
    this.accumulatedMs += this.clock.now() - this.segmentStart;
    this.state = "paused";
  }

  stop(): void {
    this.finishPlay();
  }

  /** Jump within the video; one NavigateWithin per skip. */
  skipTo(index: number): void {
    if (!this.current || this.frames.length === 0) return;
    this.frameIndex = Math.min(Math.max(index, 0), this.frames.length - 1);
    this.buffer.emit("NavigateWithin", this.frames[this.frameIndex].shot_id);
    void this.buffer.flush();
  }

  /** Page through the keyframe strip without seeking playback. */
  browse(shotId: string): void {
    this.buffer.emit("BrowseKeyframes", shotId);
    void this.buffer.flush();
  }

  private finishPlay(): void {
    if (!this.current) return;
    if (this.state === "playing") {
      this.accumulatedMs += this.clock.now() - this.segmentStart;
    }
    if (this.state !== "idle") {
      this.buffer.emit("Play", this.current.shot_id, this.accumulatedMs);
      void this.buffer.flush();
    }
    this.state = "idle";
    this.accumulatedMs = 0;
  }
}
