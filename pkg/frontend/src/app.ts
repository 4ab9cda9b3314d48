import { ApiClient } from "./api";
import { ChatPane } from "./chat";
import { RecommendationList } from "./recommendations";
import { WhatIfPanel } from "./whatif";

// Single-page bootstrap: one session, three panes sharing the same panel
// so every apply action funnels through a single /whatif source of truth.

export interface AppConfig {
  serverOrigin: string;
  participantId?: string;
  healthPollMs?: number;
}

export async function mountApp(root: HTMLElement, config: AppConfig): Promise<{
  api: ApiClient;
  panel: WhatIfPanel;
  chat: ChatPane;
  recs: RecommendationList;
}> {
  const api = new ApiClient(config.serverOrigin);
  const features = await api.getFeatures();
  const session = await api.createSession(
    config.participantId ? { participant_id: config.participantId } : { snapshot: defaultSnapshot(features) },
  );

  const panel = new WhatIfPanel(api, session.session_id, features);
  const chat = new ChatPane(api, session.session_id, panel);
  const recs = new RecommendationList(api, session.session_id, panel);
  root.append(panel.el, chat.el, recs.el);
  await panel.load();

  const pollMs = config.healthPollMs ?? 5000;
  setInterval(() => {
    void panel.checkHealth().then((ok) => chat.setOffline(!ok));
  }, pollMs);

  return { api, panel, chat, recs };
}

function defaultSnapshot(features: { name: string; current_value: number }[]) {
  const values: Record<string, number> = {};
  for (const f of features) values[f.name] = f.current_value;
  return { feature_values: values };
}
