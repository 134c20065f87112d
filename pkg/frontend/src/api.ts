/** Typed client for the annotation service JSON API. */

export interface SentencePayload {
  index: number;
  text: string;
}

export interface DocPayload {
  doc_id: string;
  sentences: SentencePayload[];
}

export interface StartPayload extends DocPayload {
  session_id: string;
  labels: string[];
}

export interface SessionStatePayload {
  session_id: string;
  annotator_id: string;
  status: "InProgress" | "Complete";
  labels: string[];
  assigned: Record<string, string>;
  exported: string[];
  doc_id: string | null;
  sentences: SentencePayload[];
}

export interface CompletePayload {
  exported: string;
  next: DocPayload | null;
}

export interface ProgressPayload {
  counts: { pending: number; checked_out: number; done: number };
  total: number;
  histogram: Record<string, number>;
}

/** Server-reported failure; `code` mirrors the service's kebab-case codes. */
export class ApiError extends Error {
  readonly status: number;
  readonly code: string;
  /** Unlabeled sentence indexes, set for incomplete-annotation responses. */
  readonly unlabeled: number[];

  constructor(status: number, code: string, detail: string, unlabeled: number[] = []) {
    super(detail);
    this.name = "ApiError";
    this.status = status;
    this.code = code;
    this.unlabeled = unlabeled;
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/** What the app needs from the transport; tests substitute stubs. */
export interface ApiClient {
  startSession(annotatorId: string): Promise<StartPayload>;
  sessionState(sessionId: string): Promise<SessionStatePayload>;
  submitLabel(sessionId: string, index: number, label: string): Promise<void>;
  complete(sessionId: string): Promise<CompletePayload>;
  progress(): Promise<ProgressPayload>;
}

export class Api implements ApiClient {
  private readonly fetchImpl: FetchLike;

  constructor(
    private readonly baseUrl = "",
    fetchImpl?: FetchLike,
  ) {
    // call through globalThis so window.fetch keeps its receiver
    this.fetchImpl = fetchImpl ?? ((input, init) => globalThis.fetch(input, init));
  }

  startSession(annotatorId: string): Promise<StartPayload> {
    return this.request("POST", "/api/sessions", { annotator_id: annotatorId });
  }

  sessionState(sessionId: string): Promise<SessionStatePayload> {
    return this.request("GET", `/api/sessions/${encodeURIComponent(sessionId)}`);
  }

  async submitLabel(sessionId: string, index: number, label: string): Promise<void> {
    await this.request("POST", `/api/sessions/${encodeURIComponent(sessionId)}/labels`, {
      index,
      label,
    });
  }

  complete(sessionId: string): Promise<CompletePayload> {
    return this.request("POST", `/api/sessions/${encodeURIComponent(sessionId)}/complete`, {});
  }

  progress(): Promise<ProgressPayload> {
    return this.request("GET", "/api/progress");
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const res = await this.fetchImpl(this.baseUrl + path, init);
    const text = await res.text();
    let data: unknown = null;
    try {
      data = text ? JSON.parse(text) : null;
    } catch {
      // non-JSON error body; fall through to the status-based error
    }
    if (!res.ok) {
      const record = (data ?? {}) as Record<string, unknown>;
      const code = typeof record.error === "string" ? record.error : `http-${res.status}`;
      const detail =
        typeof record.detail === "string" ? record.detail : res.statusText || "request failed";
      const unlabeled = Array.isArray(record.unlabeled)
        ? record.unlabeled.filter((i): i is number => typeof i === "number")
        : [];
      throw new ApiError(res.status, code, detail, unlabeled);
    }
    return data as T;
  }
}
