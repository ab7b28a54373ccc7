/** Thin typed client for the annotation service. */

import type {
  GesturesResponse,
  LabelPayload,
  NextResponse,
  ProgressResponse,
  SessionResponse,
  SubmitResponse,
} from "./types.js";

/** Server-side rejection (422 validation, 404 unknown resource, ...). */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

/** The service could not be reached at all (offline, not started, ...). */
export class ServiceUnreachableError extends Error {
  constructor(cause: unknown) {
    super(`annotation service unreachable: ${String(cause)}`);
    this.name = "ServiceUnreachableError";
  }
}

type FetchLike = typeof fetch;

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = fetch,
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchImpl(this.baseUrl + path, init);
    } catch (cause) {
      throw new ServiceUnreachableError(cause);
    }
    const body = (await response.json().catch(() => ({}))) as Record<string, unknown>;
    if (!response.ok) {
      const reason = typeof body.error === "string" ? body.error : response.statusText;
      throw new ApiError(response.status, reason);
    }
    return body as T;
  }

  private post<T>(path: string, payload: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  getGestures(): Promise<GesturesResponse> {
    return this.request<GesturesResponse>("/gestures");
  }

  startSession(annotatorId: string): Promise<SessionResponse> {
    return this.post<SessionResponse>("/sessions", { annotator_id: annotatorId });
  }

  getSession(sessionId: string): Promise<SessionResponse> {
    return this.request<SessionResponse>(`/sessions/${sessionId}`);
  }

  nextSentence(sessionId: string): Promise<NextResponse> {
    return this.request<NextResponse>(`/sessions/${sessionId}/next`);
  }

  submitLabels(
    sessionId: string,
    sentenceId: string,
    labels: LabelPayload[],
  ): Promise<SubmitResponse> {
    return this.post<SubmitResponse>(`/sessions/${sessionId}/labels`, {
      sentence_id: sentenceId,
      labels,
    });
  }

  progress(annotatorId: string): Promise<ProgressResponse> {
    return this.request<ProgressResponse>(`/progress/${annotatorId}`);
  }
}
