import type { Analysis, MoveResponse, NewGameOptions, ServerState } from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/** Thin typed client for the play service; all game logic stays server-side. */
export class ApiClient {
  private fetchFn: FetchLike;

  constructor(
    private baseUrl: string = "",
    fetchFn?: FetchLike,
  ) {
    this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const resp = await this.fetchFn(this.baseUrl + path, {
      method,
      headers: body === undefined ? undefined : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const text = await resp.text();
    let data: unknown = null;
    try {
      data = text ? JSON.parse(text) : null;
    } catch {
      data = null;
    }
    if (!resp.ok) {
      const err = data as { code?: string; message?: string } | null;
      throw new ApiError(resp.status, err?.code ?? "http_error", err?.message ?? resp.statusText);
    }
    return data as T;
  }

  newGame(options: NewGameOptions): Promise<ServerState> {
    return this.request("POST", "/game", options);
  }

  getGame(sessionId: string): Promise<ServerState> {
    return this.request("GET", `/game/${sessionId}`);
  }

  move(sessionId: string, action: number): Promise<MoveResponse> {
    return this.request("POST", `/game/${sessionId}/move`, { action });
  }

  pass(sessionId: string): Promise<MoveResponse> {
    return this.request("POST", `/game/${sessionId}/pass`);
  }

  restart(sessionId: string): Promise<ServerState> {
    return this.request("POST", `/game/${sessionId}/new`);
  }

  analysis(sessionId: string): Promise<Analysis> {
    return this.request("GET", `/game/${sessionId}/analysis`);
  }

  sgfUrl(sessionId: string): string {
    return `${this.baseUrl}/game/${sessionId}/sgf`;
  }
}
