// Typed client for the recognition service. The UI never computes metrics;
// everything it shows comes back from these calls.

export interface SessionStart {
  session_id: number;
  prompts: string[];
}

export interface CharacterResult {
  posterior: Record<string, number>;
  prediction: string;
  duration_s: number;
}

export interface ChannelReport {
  entropy_marginal: number;
  mutual_information: number | null;
  mean_log_loss: number;
  mean_duration: number;
  rate_mi: number | null;
  rate_ll: number;
  rate_ideal: number;
  n: number;
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

async function asJson<T>(res: Response): Promise<T> {
  if (!res.ok) {
    let detail = res.statusText;
    try {
      const body = await res.json();
      if (body && typeof body.detail === "string") detail = body.detail;
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new ApiError(res.status, detail);
  }
  return (await res.json()) as T;
}

export class ScribeClient {
  constructor(
    private baseUrl: string,
    private fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  startSession(userId: string): Promise<SessionStart> {
    return this.call(`/users/${encodeURIComponent(userId)}/sessions`, "POST");
  }

  submitCharacter(
    userId: string,
    sessionId: number,
    prompt: string,
    samples: number[][],
  ): Promise<CharacterResult> {
    return this.call(
      `/users/${encodeURIComponent(userId)}/sessions/${sessionId}/characters`,
      "POST",
      { prompt, samples },
    );
  }

  sessionScore(userId: string, sessionId: number): Promise<ChannelReport> {
    return this.call(
      `/users/${encodeURIComponent(userId)}/sessions/${sessionId}/score`,
      "GET",
    );
  }

  private async call<T>(path: string, method: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: { "Content-Type": "application/json" } };
    if (body !== undefined) init.body = JSON.stringify(body);
    const res = await this.fetchImpl(this.baseUrl + path, init);
    return asJson<T>(res);
  }
}
