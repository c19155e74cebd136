// Typed client for the play service. All numbers shown to the user come
// back from these endpoints; the UI itself never computes a payoff.

export interface GameInfo {
  name: string;
  players: number;
  actions: string[][];
  zero_sum: boolean;
}

export interface Diagnostics {
  confidence: number;
  human_entropy_estimate: number;
  stages_played: number;
}

export interface SessionState {
  id: string;
  game: string;
  n: number;
  engine: Record<string, unknown>;
  transcript: [string, string][]; // [engine action, human action] per stage
  scores: [string, string]; // exact rationals as "p/q" strings
  remaining: number;
  finished: boolean;
  diagnostics: Diagnostics;
}

export interface StageResult {
  stage: number;
  engine_action: string;
  human_action: string;
  payoffs: [string, string];
  scores: [string, string];
  finished: boolean;
  diagnostics: Diagnostics;
}

export interface SessionConfig {
  game: string;
  n: number;
  engine?: Record<string, unknown>;
  engineSeed?: number;
}

export class ApiError extends Error {
  constructor(readonly status: number, detail: string) {
    super(detail);
    this.name = 'ApiError';
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  private readonly fetchFn: FetchLike;

  constructor(private readonly baseUrl: string, fetchFn?: FetchLike) {
    this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await this.fetchFn(`${this.baseUrl}${path}`, init);
    const body: unknown = await res.json().catch(() => null);
    if (!res.ok) {
      const detail =
        body && typeof (body as { detail?: unknown }).detail === 'string'
          ? (body as { detail: string }).detail
          : `HTTP ${res.status}`;
      throw new ApiError(res.status, detail);
    }
    return body as T;
  }

  listGames(): Promise<{ games: GameInfo[] }> {
    return this.request('/api/games');
  }

  createSession(config: SessionConfig): Promise<SessionState> {
    const body: Record<string, unknown> = {
      game: config.game,
      n: config.n,
      engine: config.engine ?? {},
    };
    if (config.engineSeed !== undefined) {
      body.engine_seed = config.engineSeed;
    }
    return this.request('/api/session', {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(body),
    });
  }

  submitMove(id: string, action: string): Promise<StageResult> {
    return this.request(`/api/session/${id}/move`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ action }),
    });
  }

  getState(id: string): Promise<SessionState> {
    return this.request(`/api/session/${id}`);
  }
}
