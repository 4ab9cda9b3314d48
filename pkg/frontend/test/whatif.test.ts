import { beforeEach, describe, expect, it, vi } from "vitest";

import { ApiClient } from "../src/api";
import { WhatIfPanel } from "../src/whatif";
import { BASE_PREDICTION, FEATURES, stubServer, whatifHandler, jsonResponse } from "./stub";

function buildPanel(handlers = {}, debounceMs = 0) {
  const stub = stubServer({ "/whatif": whatifHandler, "/health": () => ({ status: "ok" }), ...handlers });
  const api = new ApiClient("", stub.fetchFn);
  const panel = new WhatIfPanel(api, "sess-1", FEATURES, debounceMs);
  document.body.replaceChildren(panel.el);
  return { panel, stub };
}

function gauge(panel: WhatIfPanel): string {
  return panel.el.querySelector(".gauge")!.textContent!;
}

function gaugeValue(panel: WhatIfPanel): number {
  return Number((panel.el.querySelector(".gauge") as HTMLElement).dataset.value);
}

function badge(panel: WhatIfPanel): string {
  return panel.el.querySelector(".delta-badge")!.textContent!;
}

function slider(panel: WhatIfPanel, name: string): HTMLInputElement {
  return panel.el.querySelector(`input[name="${name}"]`)!;
}

const flush = () => new Promise((r) => setTimeout(r, 0));

beforeEach(() => {
  document.body.replaceChildren();
});

describe("what-if panel", () => {
  it("shows one slider per adjustable feature and read-only text otherwise", () => {
    const { panel } = buildPanel();
    expect(panel.el.querySelectorAll("input[type=range]")).toHaveLength(2);
    expect(panel.el.querySelector(".readonly-value")!.textContent).toBe("420");
    const steps = slider(panel, "steps_total");
    expect([steps.min, steps.max]).toEqual(["0", "20000"]);
  });

  it("renders the base prediction with a zero delta before any movement", async () => {
    const { panel, stub } = buildPanel();
    await panel.load();
    expect(stub.requests.at(-1)).toEqual({
      path: "/whatif",
      body: { session_id: "sess-1", overrides: {} },
    });
    expect(gauge(panel)).toBe("85.0%");
    expect(badge(panel)).toBe("±0.0");
  });

  it("fires /whatif on slider release and shows the server's number", async () => {
    const { panel, stub } = buildPanel();
    await panel.load();
    const steps = slider(panel, "steps_total");
    steps.value = "7000";
    steps.dispatchEvent(new Event("change"));
    await flush();
    expect(stub.requests.at(-1)!.body).toEqual({
      session_id: "sess-1",
      overrides: { steps_total: 7000 },
    });
    expect(gaugeValue(panel)).toBeCloseTo(BASE_PREDICTION + 2000 * 0.00001, 12);
  });

  it("debounces repeated releases into one request", async () => {
    vi.useFakeTimers();
    try {
      const { panel, stub } = buildPanel({}, 150);
      const steps = slider(panel, "steps_total");
      for (const v of ["6000", "6500", "7000"]) {
        steps.value = v;
        steps.dispatchEvent(new Event("change"));
        await vi.advanceTimersByTimeAsync(100); // under the debounce each time
      }
      expect(stub.requests).toHaveLength(0);
      await vi.advanceTimersByTimeAsync(200);
      expect(stub.requests).toHaveLength(1);
      expect((stub.requests[0].body as any).overrides).toEqual({ steps_total: 7000 });
    } finally {
      vi.useRealTimers();
    }
  });

  it("returns the delta badge to zero when a slider moves back", async () => {
    const { panel } = buildPanel();
    await panel.load();
    const steps = slider(panel, "steps_total");
    steps.value = "7000";
    steps.dispatchEvent(new Event("change"));
    await flush();
    expect(badge(panel)).not.toBe("±0.0");
    steps.value = "5000";
    steps.dispatchEvent(new Event("change"));
    await flush();
    expect(badge(panel)).toBe("±0.0");
    expect(gauge(panel)).toBe("85.0%");
  });

  it("always shows the last issued request's modified_prediction (latest wins)", async () => {
    // the first request resolves after the second; its stale answer must drop
    let release!: () => void;
    const gate = new Promise<void>((r) => (release = r));
    let calls = 0;
    const { panel } = buildPanel({
      "/whatif": async (body: any) => {
        calls += 1;
        if (calls === 1) await gate;
        return whatifHandler(body);
      },
    });
    const slow = panel.applyOverride("steps_total", 9000);
    const fast = panel.applyOverride("steps_total", 6000);
    await fast;
    const after = gaugeValue(panel);
    release();
    await slow;
    expect(gaugeValue(panel)).toBe(after);
    expect(gaugeValue(panel)).toBeCloseTo(BASE_PREDICTION + 1000 * 0.00001, 12);
  });

  it("shows a banner and disables sliders when the server fails", async () => {
    let healthy = false;
    const { panel } = buildPanel({
      "/whatif": () => {
        throw new Error("connection refused");
      },
      "/health": () => {
        if (!healthy) throw new Error("connection refused");
        return { status: "ok" };
      },
    });
    await panel.load();
    const banner = panel.el.querySelector(".error-banner") as HTMLElement;
    expect(banner.hidden).toBe(false);
    expect(slider(panel, "steps_total").disabled).toBe(true);

    expect(await panel.checkHealth()).toBe(false);
    expect(slider(panel, "steps_total").disabled).toBe(true);
    healthy = true;
    expect(await panel.checkHealth()).toBe(true);
    expect(banner.hidden).toBe(true);
    expect(slider(panel, "steps_total").disabled).toBe(false);
  });

  it("surfaces structured API errors with their server code", async () => {
    const stub = stubServer({
      "/whatif": () => ({}),
    });
    const failing = async () =>
      jsonResponse({ code: "OutOfRange", message: "steps_total=1e9", detail: null }, 422);
    const api = new ApiClient("", failing);
    await expect(api.whatif("s", {})).rejects.toMatchObject({ status: 422, code: "OutOfRange" });
    expect(stub.requests).toHaveLength(0);
  });
});
