import { ServiceClient } from "./api.js";
import { PlaybackController } from "./playback.js";
import { UiSession, type TabName } from "./session.js";
import { realScheduler, type RelevanceLevel, type SearchResult, type ShotRecord } from "./types.js";

const TABS: { name: TabName; label: string }[] = [
  { name: "results", label: "Results" },
  { name: "relevant", label: "Relevant" },
  { name: "maybe", label: "Maybe" },
  { name: "not_relevant", label: "Not relevant" },
  { name: "past_recommendations", label: "Past recommendations" },
];

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function newSessionId(): string {
  return `ui-${Date.now().toString(36)}-${Math.random().toString(36).slice(2, 8)}`;
}

export function startApp(root: HTMLElement): void {
  const client = new ServiceClient("");
  const userId = new URLSearchParams(location.search).get("user") ?? "anon";
  let activeTab: TabName = "results";

  const banner = el("div", "banner hidden");
  const searchForm = el("form", "search-form");
  const searchInput = el("input");
  searchInput.type = "search";
  searchInput.placeholder = "search shots...";
  const searchButton = el("button", "", "Search");
  searchForm.append(searchInput, searchButton);

  const recPanel = el("div", "recs");
  const tabBar = el("div", "tab-bar");
  const grid = el("div", "grid");
  const playerPanel = el("div", "player");

  const session = new UiSession(newSessionId(), userId, client, realScheduler, {
    onResults: renderTabs,
    onRecommendations: renderRecommendations,
    onTabsChanged: renderTabs,
    onError: showBanner,
  });
  const playback = new PlaybackController(session.buffer, realScheduler);

  function showBanner(message: string): void {
    banner.textContent = message;
    banner.classList.remove("hidden");
    realScheduler.schedule(() => banner.classList.add("hidden"), 6000);
  }

  function sliderFor(shot: ShotRecord): HTMLElement {
    // three-stop slider: not relevant / maybe / relevant
    const slider = el("input", "relevance") as HTMLInputElement;
    slider.type = "range";
    slider.min = "0";
    slider.max = "2";
    const current = session.relevanceOf(shot.shot_id);
    slider.value = current === "relevant" ? "2" : current === "maybe" ? "1" : "0";
    slider.addEventListener("change", () => {
      const level: RelevanceLevel =
        slider.value === "2" ? "relevant" : slider.value === "1" ? "maybe" : "not_relevant";
      session.setRelevance(shot.shot_id, level);
    });
    return slider;
  }

  function shotCard(shot: ShotRecord, score?: number): HTMLElement {
    const card = el("div", "card");
    const frame = el("div", "keyframe", shot.keyframe_ref || shot.shot_id);
    frame.addEventListener("mouseenter", () => {
      session.hoverKeyframe(shot.shot_id);
      void client
        .shotDetail(shot.shot_id)
        .then((detail) => renderNeighbors(card, detail.neighbors))
        .catch(() => undefined);
    });
    frame.addEventListener("mouseleave", () => session.leaveKeyframe(shot.shot_id));
    frame.addEventListener("click", () => {
      session.viewShot(shot.shot_id);
      void client
        .shotDetail(shot.shot_id, 3)
        .then((detail) => {
          playback.load(detail.shot, [detail.shot, ...detail.neighbors]);
          renderPlayer();
        })
        .catch((err) => showBanner(String(err)));
    });
    card.append(frame, el("div", "text", shot.text));
    if (score !== undefined) card.append(el("div", "score", score.toFixed(4)));
    card.append(sliderFor(shot));
    return card;
  }

  function renderNeighbors(card: HTMLElement, neighbors: ShotRecord[]): void {
    card.querySelector(".neighbors")?.remove();
    const strip = el("div", "neighbors");
    for (const shot of neighbors) {
      strip.append(el("span", "thumb", shot.keyframe_ref || shot.shot_id));
    }
    card.append(strip);
  }

  function renderTabs(): void {
    tabBar.replaceChildren();
    for (const tab of TABS) {
      const count = session.tabContents(tab.name).length;
      const button = el(
        "button",
        tab.name === activeTab ? "tab active" : "tab",
        `${tab.label} (${count})`,
      );
      button.addEventListener("click", () => {
        activeTab = tab.name;
        renderTabs();
      });
      tabBar.append(button);
    }
    grid.replaceChildren();
    for (const shot of session.tabContents(activeTab)) {
      const score =
        activeTab === "results"
          ? (shot as SearchResult).score
          : undefined;
      grid.append(shotCard(shot, score));
    }
  }

  function renderRecommendations(): void {
    recPanel.replaceChildren(el("h3", "", "Recommended"));
    for (const rec of session.recommendations.documents) {
      const item = el("div", "rec-shot", `${rec.shot_id}  ${rec.text ?? ""}`);
      item.addEventListener("click", () => {
        session.viewShot(rec.shot_id);
      });
      recPanel.append(item);
    }
    for (const rec of session.recommendations.queries) {
      const item = el("div", "rec-query", rec.query);
      item.addEventListener("click", () => void session.issueQuery(rec.query));
      recPanel.append(item);
    }
    if (
      session.recommendations.documents.length === 0 &&
      session.recommendations.queries.length === 0
    ) {
      recPanel.append(el("div", "rec-empty", "nothing new yet"));
    }
    renderTabs();
  }

  function renderPlayer(): void {
    playerPanel.replaceChildren();
    if (!playback.current) {
      playerPanel.append(el("div", "", "click a keyframe to load it"));
      return;
    }
    const frame = el(
      "div",
      "player-frame",
      playback.frames[playback.frameIndex]?.keyframe_ref ?? playback.current.keyframe_ref,
    );
    const controls = el("div", "controls");
    for (const [label, handler] of [
      ["play", () => playback.play()],
      ["pause", () => playback.pause()],
      ["stop", () => playback.stop()],
      ["prev", () => playback.skipTo(playback.frameIndex - 1)],
      ["next", () => playback.skipTo(playback.frameIndex + 1)],
    ] as const) {
      const button = el("button", "", label);
      button.addEventListener("click", () => {
        handler();
        renderPlayer();
      });
      controls.append(button);
    }
    const strip = el("div", "strip");
    playback.frames.forEach((shot, i) => {
      const thumb = el("span", i === playback.frameIndex ? "thumb here" : "thumb");
      thumb.textContent = shot.keyframe_ref || shot.shot_id;
      thumb.addEventListener("click", () => {
        playback.browse(shot.shot_id);
        renderPlayer();
      });
      strip.append(thumb);
    });
    playerPanel.append(frame, controls, strip, sliderFor(playback.current));
  }

  searchForm.addEventListener("submit", (e) => {
    e.preventDefault();
    void session.issueQuery(searchInput.value).then((ok) => {
      if (!ok && session.lastValidationError) {
        showBanner(session.lastValidationError);
      }
    });
  });

  const searchPanel = el("div", "panel search-panel");
  searchPanel.append(searchForm, recPanel);
  const resultPanel = el("div", "panel result-panel");
  resultPanel.append(tabBar, grid);
  const playPanel = el("div", "panel play-panel");
  playPanel.append(playerPanel);
  root.append(banner, searchPanel, resultPanel, playPanel);
  renderTabs();
  renderRecommendations();
  renderPlayer();

  // retry loop keeps events flowing after transient server errors
  const tick = () => {
    void session.buffer.flush();
    realScheduler.schedule(tick, 3000);
  };
  realScheduler.schedule(tick, 3000);
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  startApp(document.getElementById("app") as HTMLElement);
}
