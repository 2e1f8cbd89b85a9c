// End-to-end against the real backend: spawns `trailmine serve` (the Python
// package must be installed) and drives a scripted UI session over HTTP.
// Skipped when the binary is not available.

import { spawn, spawnSync, type ChildProcess } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import { createServer } from "node:net";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ServiceClient } from "../src/api.js";
import { PlaybackController } from "../src/playback.js";
import { UiSession } from "../src/session.js";
import { realScheduler } from "../src/types.js";

const HAVE_BACKEND = spawnSync("trailmine", ["--help"], { stdio: "ignore" }).status === 0;

const SHOTS = [
  { shot_id: "shotA", video_id: "v1", seq_index: 0, text: "basketball dunk", keyframe_ref: "kf/a.jpg" },
  { shot_id: "shotB", video_id: "v1", seq_index: 1, text: "basketball court", keyframe_ref: "kf/b.jpg" },
  { shot_id: "shotC", video_id: "v1", seq_index: 2, text: "storm clouds", keyframe_ref: "kf/c.jpg" },
];

let server: ChildProcess | null = null;
let base = "";

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const probe = createServer();
    probe.on("error", reject);
    probe.listen(0, "127.0.0.1", () => {
      const { port } = probe.address() as { port: number };
      probe.close(() => resolve(port));
    });
  });
}

async function waitForHealth(): Promise<void> {
  for (let i = 0; i < 100; i++) {
    try {
      const resp = await fetch(base + "/api/health");
      if (resp.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((r) => setTimeout(r, 100));
  }
  throw new Error("backend did not come up");
}

async function drain(session: UiSession): Promise<void> {
  expect(await session.buffer.flush()).toBe(true);
  expect(session.buffer.pendingCount).toBe(0);
}

beforeAll(async () => {
  if (!HAVE_BACKEND) return;
  const dir = mkdtempSync(join(tmpdir(), "trailmine-ui-"));
  const corpusPath = join(dir, "corpus.jsonl");
  writeFileSync(corpusPath, SHOTS.map((s) => JSON.stringify(s)).join("\n") + "\n");
  const port = await freePort();
  base = `http://127.0.0.1:${port}`;
  const configPath = join(dir, "svc.json");
  writeFileSync(
    configPath,
    JSON.stringify({ corpus_path: corpusPath, data_dir: join(dir, "data"), port }),
  );
  server = spawn("trailmine", ["serve", "--config", configPath], { stdio: "ignore" });
  await waitForHealth();
}, 30000);

afterAll(() => {
  server?.kill("SIGKILL");
});

describe.skipIf(!HAVE_BACKEND)("against the real service", () => {
  it("scripted session round-trips and repeated refreshes never repeat a shot", async () => {
    const client = new ServiceClient(base);

    // two past users leave basketball -> shotA trails
    for (const [sid, uid] of [["past-1", "u1"], ["past-2", "u2"]] as const) {
      const past = new UiSession(sid, uid, client, realScheduler, {});
      await past.issueQuery("basketball");
      past.viewShot("shotA");
      if (sid === "past-1") past.setRelevance("shotA", "relevant");
      await drain(past);
    }

    const errors: string[] = [];
    const session = new UiSession("live-ui", "u9", client, realScheduler, {
      onError: (m) => errors.push(m),
    });
    await session.issueQuery("basketball");
    expect(errors).toEqual([]);
    expect(session.results.map((r) => r.shot_id).sort()).toEqual(["shotA", "shotB"]);

    // once the Query event is definitely ingested, the trails surface shotA
    await drain(session);
    await session.refreshRecommendations();
    await session.refreshRecommendations();
    const shown = session.pastRecommendations.map((d) => d.shot_id);
    expect(shown).toContain("shotA");
    expect(new Set(shown).size).toBe(shown.length);

    // everything ever recommended stays on the history tab, in order
    const history = session.tabContents("past_recommendations").map((s) => s.shot_id);
    expect(history).toEqual(shown);
  }, 30000);

  it("a sub-3-second play is posted truthfully and adds no graph weight", async () => {
    const client = new ServiceClient(base);
    const session = new UiSession("short-play", "u10", client, realScheduler, {});
    const player = new PlaybackController(session.buffer, realScheduler);

    await session.issueQuery("storm");
    await drain(session);
    const before = await client.graphStats();

    const detail = await client.shotDetail("shotC");
    player.load(detail.shot);
    player.play();
    await new Promise((r) => setTimeout(r, 150));
    player.stop();
    const play = session.buffer.pendingEvents.find((e) => e.action === "Play");
    expect(play?.duration_ms).toBeGreaterThan(0);
    expect(play?.duration_ms).toBeLessThan(3000);
    await drain(session);

    // the short play was accepted but zero-weighted: the graph is untouched
    const after = await client.graphStats();
    expect(after.node_count).toBe(before.node_count);
    expect(after.edge_count).toBe(before.edge_count);
    expect(after.total_weight).toBeCloseTo(before.total_weight, 9);
  }, 30000);
});
