// Typed client for the insight-service JSON API. The server never trusts
// the client with a model; every displayed number comes from these calls.

export interface FeatureMeta {
  name: string;
  category: string;
  plausible_range: [number, number];
  adjustable: boolean;
  current_value: number;
}

export interface WhatIfResponse {
  base_prediction: number;
  modified_prediction: number;
  delta: number;
  overrides: Record<string, { old: number; new: number }>;
}

export interface Recommendation {
  feature: string;
  suggested_value: number;
  expected_gain: number;
  message: string;
}

export interface ChatReply {
  text: string;
  suggested_questions: string[];
  prediction?: number;
  whatif?: WhatIfResponse;
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}

export class ApiClient {
  constructor(
    private baseUrl: string,
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, body?: unknown): Promise<T> {
    const init: RequestInit =
      body === undefined
        ? { method: "GET" }
        : {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify(body),
          };
    const resp = await this.fetchFn(this.baseUrl + path, init);
    if (!resp.ok) {
      let code = "HttpError";
      let message = `${resp.status} on ${path}`;
      try {
        const doc = await resp.json();
        code = doc.code ?? code;
        message = doc.message ?? message;
      } catch {
        // non-JSON error body; keep defaults
      }
      throw new ApiError(resp.status, code, message);
    }
    return resp.json() as Promise<T>;
  }

  health(): Promise<{ status: string }> {
    return this.request("/health");
  }

  getFeatures(): Promise<FeatureMeta[]> {
    return this.request("/features");
  }

  createSession(body: { participant_id?: string; snapshot?: unknown }): Promise<{ session_id: string }> {
    return this.request("/session", body);
  }

  whatif(sessionId: string, overrides: Record<string, number>): Promise<WhatIfResponse> {
    return this.request("/whatif", { session_id: sessionId, overrides });
  }

  recommend(sessionId: string): Promise<{ recommendations: Recommendation[] }> {
    return this.request("/recommend", { session_id: sessionId });
  }

  chat(sessionId: string, text: string): Promise<ChatReply> {
    return this.request("/chat", { session_id: sessionId, text });
  }
}
