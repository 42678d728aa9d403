// Typed client for the session service. Plain request/response JSON,
// version tag "v": 1 on every body; the server is authoritative and
// nothing here interprets game state beyond carrying it.

export type SessionStatus = "agent_thinking" | "awaiting_env" | "finished";

export interface SessionView {
  v: number;
  id: string;
  formula: string;
  domain: number;
  status: SessionStatus;
  outcome: "Machine" | "Environment" | null;
  run: string[];
  evolution: string[];
  permissions: number;
  steps: number;
  note: string;
}

export interface LegalMoves {
  v: number;
  id: string;
  legal: string[];
}

export interface CreateRequest {
  v: 1;
  formula: string;
  agent: unknown;
  interp?: unknown;
  domain?: number;
  seed?: number;
  index?: number;
}

export class ApiError extends Error {
  constructor(readonly status: number, readonly detail: string) {
    super(`${status}: ${detail}`);
    this.name = "ApiError";
  }
}

async function unwrap<T>(res: Response): Promise<T> {
  if (res.ok) {
    return (await res.json()) as T;
  }
  let detail = res.statusText;
  try {
    const body = await res.json();
    if (typeof body.detail === "string") detail = body.detail;
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new ApiError(res.status, detail);
}

export class SessionClient {
  constructor(readonly baseUrl: string = "") {}

  private async post<T>(path: string, body: unknown): Promise<T> {
    const res = await fetch(this.baseUrl + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    return unwrap<T>(res);
  }

  async create(req: CreateRequest): Promise<SessionView> {
    return this.post("/sessions", req);
  }

  async state(id: string): Promise<SessionView> {
    const res = await fetch(`${this.baseUrl}/sessions/${id}`);
    return unwrap<SessionView>(res);
  }

  async legal(id: string): Promise<LegalMoves> {
    const res = await fetch(`${this.baseUrl}/sessions/${id}/legal`);
    return unwrap<LegalMoves>(res);
  }

  async move(id: string, move: string): Promise<SessionView> {
    return this.post(`/sessions/${id}/move`, { v: 1, move });
  }

  async step(id: string, n = 1): Promise<SessionView> {
    return this.post(`/sessions/${id}/step`, { v: 1, n });
  }
}
