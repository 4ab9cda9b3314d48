import type { ApiClient, Recommendation } from "./api";
import type { WhatIfPanel } from "./whatif";

// Recommendation cards, fetched on demand. Each card's apply action mirrors
// the what-if apply: move the slider, let the panel refire /whatif.

export class RecommendationList {
  readonly el: HTMLElement;
  private readonly cards: HTMLElement;

  constructor(
    private api: ApiClient,
    private sessionId: string,
    private panel: WhatIfPanel,
  ) {
    this.el = document.createElement("section");
    this.el.className = "recommendations";

    const refresh = document.createElement("button");
    refresh.className = "refresh-recs";
    refresh.textContent = "Get recommendations";
    refresh.addEventListener("click", () => void this.refresh());
    this.cards = document.createElement("div");
    this.cards.className = "cards";
    this.el.append(refresh, this.cards);
  }

  async refresh(): Promise<void> {
    let recs: Recommendation[];
    try {
      recs = (await this.api.recommend(this.sessionId)).recommendations;
    } catch {
      return;
    }
    this.cards.replaceChildren();
    if (recs.length === 0) {
      const empty = document.createElement("p");
      empty.className = "empty-state";
      empty.textContent = "No changes look worthwhile right now - your routine is working.";
      this.cards.appendChild(empty);
      return;
    }
    for (const rec of recs) this.cards.appendChild(this.buildCard(rec));
  }

  private buildCard(rec: Recommendation): HTMLElement {
    const card = document.createElement("article");
    card.className = "rec-card";
    card.dataset.feature = rec.feature;

    const title = document.createElement("h3");
    title.textContent = rec.feature;
    const gain = document.createElement("span");
    gain.className = "gain";
    gain.textContent = `+${(rec.expected_gain * 100).toFixed(1)}% efficiency`;
    const body = document.createElement("p");
    body.textContent = rec.message;
    const apply = document.createElement("button");
    apply.className = "apply-rec";
    apply.textContent = "Apply";
    apply.addEventListener("click", () => void this.panel.applyOverride(rec.feature, rec.suggested_value));

    card.append(title, gain, body, apply);
    return card;
  }
}
