import type { ApiClient, FeatureMeta, WhatIfResponse } from "./api";

// Slider panel with a prediction gauge. The client never predicts anything
// itself: the gauge always shows the latest /whatif modified_prediction,
// and stale responses are dropped by sequence number (latest wins).

const DEBOUNCE_MS = 150;

export class WhatIfPanel {
  readonly el: HTMLElement;
  private readonly gauge: HTMLElement;
  private readonly badge: HTMLElement;
  private readonly banner: HTMLElement;
  private readonly sliders = new Map<string, HTMLInputElement>();
  private readonly original = new Map<string, number>();
  private timer: ReturnType<typeof setTimeout> | null = null;
  private sent = 0;
  private shown = 0;

  constructor(
    private api: ApiClient,
    private sessionId: string,
    features: FeatureMeta[],
    private debounceMs: number = DEBOUNCE_MS,
  ) {
    this.el = document.createElement("section");
    this.el.className = "whatif-panel";

    this.gauge = document.createElement("div");
    this.gauge.className = "gauge";
    this.badge = document.createElement("span");
    this.badge.className = "delta-badge";
    this.banner = document.createElement("div");
    this.banner.className = "error-banner";
    this.banner.hidden = true;
    this.el.append(this.gauge, this.badge, this.banner);

    for (const feat of features) {
      this.el.appendChild(this.buildRow(feat));
    }
  }

  private buildRow(feat: FeatureMeta): HTMLElement {
    const row = document.createElement("label");
    row.className = "feature-row";
    const name = document.createElement("span");
    name.textContent = feat.name;
    row.appendChild(name);

    if (!feat.adjustable) {
      const value = document.createElement("span");
      value.className = "readonly-value";
      value.textContent = String(feat.current_value);
      row.appendChild(value);
      return row;
    }

    const slider = document.createElement("input");
    slider.type = "range";
    slider.name = feat.name;
    slider.min = String(feat.plausible_range[0]);
    slider.max = String(feat.plausible_range[1]);
    slider.step = "any";
    slider.value = String(feat.current_value);
    // "change" fires on release, not during the drag
    slider.addEventListener("change", () => this.scheduleRequest());
    this.sliders.set(feat.name, slider);
    this.original.set(feat.name, feat.current_value);
    row.appendChild(slider);
    return row;
  }

  /** Current slider positions that differ from the session snapshot. */
  overrides(): Record<string, number> {
    const out: Record<string, number> = {};
    for (const [name, slider] of this.sliders) {
      const value = Number(slider.value);
      if (value !== this.original.get(name)) out[name] = value;
    }
    return out;
  }

  /** Initial gauge state: an empty-override /whatif, so delta is exactly 0. */
  async load(): Promise<void> {
    await this.fire();
  }

  /** Move one slider programmatically (chat/recommendation apply) and refire. */
  async applyOverride(name: string, value: number): Promise<void> {
    const slider = this.sliders.get(name);
    if (!slider) return;
    slider.value = String(value);
    await this.fire();
  }

  sliderValue(name: string): number {
    const slider = this.sliders.get(name);
    if (!slider) throw new Error(`no slider for ${name}`);
    return Number(slider.value);
  }

  private scheduleRequest(): void {
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = setTimeout(() => {
      this.timer = null;
      void this.fire();
    }, this.debounceMs);
  }

  private async fire(): Promise<void> {
    const seq = ++this.sent;
    let resp: WhatIfResponse;
    try {
      resp = await this.api.whatif(this.sessionId, this.overrides());
    } catch {
      this.setOffline(true);
      return;
    }
    if (seq < this.shown) return; // a newer response already landed
    this.shown = seq;
    this.setOffline(false);
    this.render(resp);
  }

  private render(resp: WhatIfResponse): void {
    this.gauge.textContent = `${(resp.modified_prediction * 100).toFixed(1)}%`;
    this.gauge.dataset.value = String(resp.modified_prediction);
    this.badge.textContent =
      resp.delta === 0 ? "±0.0" : `${resp.delta >= 0 ? "+" : ""}${(resp.delta * 100).toFixed(1)}`;
  }

  private setOffline(offline: boolean): void {
    this.banner.hidden = !offline;
    this.banner.textContent = offline ? "Server unreachable - sliders paused" : "";
    for (const slider of this.sliders.values()) slider.disabled = offline;
  }

  /** Re-enable the panel once /health answers again. */
  async checkHealth(): Promise<boolean> {
    try {
      await this.api.health();
    } catch {
      this.setOffline(true);
      return false;
    }
    this.setOffline(false);
    return true;
  }
}
