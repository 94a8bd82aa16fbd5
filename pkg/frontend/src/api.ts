// Typed client for the session service. The fetch function is injectable
// so tests can stub the transport.

import type {
  ApiErrorBody,
  KbInfo,
  ReportJson,
  SessionState,
  WhatIfResult,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  readonly body: ApiErrorBody;

  constructor(body: ApiErrorBody) {
    super(body.message);
    this.body = body;
  }

  get kind(): string {
    return this.body.kind;
  }
}

async function parseError(response: Response): Promise<ApiError> {
  let body: ApiErrorBody;
  try {
    body = (await response.json()) as ApiErrorBody;
  } catch {
    body = { status: response.status, kind: "http_error", message: response.statusText, details: {} };
  }
  return new ApiError(body);
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: { "content-type": "application/json" } };
    if (body !== undefined) {
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchFn(this.baseUrl + path, init);
    if (!response.ok) {
      throw await parseError(response);
    }
    return (await response.json()) as T;
  }

  listKbs(): Promise<{ knowledge_bases: KbInfo[] }> {
    return this.request("GET", "/kb");
  }

  createSession(kbId: string, specText: string, sessionId?: string): Promise<SessionState> {
    return this.request("POST", "/sessions", {
      kb_id: kbId,
      spec_text: specText,
      session_id: sessionId,
    });
  }

  getSession(id: string): Promise<SessionState> {
    return this.request("GET", `/sessions/${id}`);
  }

  updateSpec(id: string, specText: string, version: number): Promise<SessionState> {
    return this.request("PUT", `/sessions/${id}/spec`, { spec_text: specText, version });
  }

  advance(id: string, version: number): Promise<SessionState> {
    return this.request("POST", `/sessions/${id}/advance`, { version });
  }

  commit(id: string, decisionId: string, version: number, note?: string): Promise<SessionState> {
    return this.request("POST", `/sessions/${id}/decisions`, {
      decision_id: decisionId,
      override_note: note,
      version,
    });
  }

  retract(id: string, decisionId: string, version: number): Promise<SessionState> {
    return this.request("DELETE", `/sessions/${id}/decisions/${decisionId}?version=${version}`);
  }

  whatIf(id: string, decisionId: string): Promise<WhatIfResult> {
    return this.request("POST", `/sessions/${id}/whatif`, { decision_id: decisionId });
  }

  resolveOutcome(
    id: string,
    outcomeId: string,
    verdict: "accepted" | "rejected",
    version: number,
    editedStatement?: string,
  ): Promise<SessionState> {
    return this.request("POST", `/sessions/${id}/outcomes/${outcomeId}`, {
      verdict,
      edited_statement: editedStatement,
      version,
    });
  }

  report(id: string): Promise<ReportJson> {
    return this.request("GET", `/sessions/${id}/report`);
  }
}
