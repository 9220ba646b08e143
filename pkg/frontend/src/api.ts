import type {
  CommonDomainPayload,
  ComparePayload,
  DiscoverPayload,
  EntityPayload,
  ListPayload,
  MinLevel,
  SuggestResponse,
  SummaryPayload,
  RegistrySummaryPayload,
  TokenResponse,
} from "./types.js";

/** Error raised for any non-2xx response; mirrors the flat API error body. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export function joinUrl(base: string, path: string): string {
  return base.replace(/\/+$/, "") + path;
}

function queryString(params: Record<string, string | number | undefined>): string {
  const search = new URLSearchParams();
  for (const [key, value] of Object.entries(params)) {
    if (value !== undefined) search.set(key, String(value));
  }
  const text = search.toString();
  return text ? `?${text}` : "";
}

/** Thin typed client for the repository's JSON API. */
export class ApiClient {
  private token: string | null = null;
  roles: string[] = [];

  constructor(
    readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (...args) => globalThis.fetch(...args),
  ) {}

  setToken(token: string | null, roles: string[] = []): void {
    this.token = token;
    this.roles = roles;
  }

  get authenticated(): boolean {
    return this.token !== null;
  }

  private async request<T>(
    method: string,
    path: string,
    options: { body?: unknown; signal?: AbortSignal } = {},
  ): Promise<T> {
    const headers: Record<string, string> = {};
    if (this.token) headers["Authorization"] = `Bearer ${this.token}`;
    if (options.body !== undefined) headers["Content-Type"] = "application/json";
    const response = await this.fetchImpl(joinUrl(this.baseUrl, path), {
      method,
      headers,
      body: options.body === undefined ? undefined : JSON.stringify(options.body),
      signal: options.signal,
    });
    if (response.status === 204) return undefined as T;
    let payload: unknown = null;
    const text = await response.text();
    if (text) {
      try {
        payload = JSON.parse(text);
      } catch {
        payload = null;
      }
    }
    if (!response.ok) {
      const body = (payload ?? {}) as { error?: string; message?: string };
      throw new ApiError(
        response.status,
        body.error ?? "http_error",
        body.message ?? `HTTP ${response.status}`,
      );
    }
    return payload as T;
  }

  async login(username: string, password: string): Promise<TokenResponse> {
    const granted = await this.request<TokenResponse>("POST", "/api/auth/token", {
      body: { username, password },
    });
    this.setToken(granted.token, granted.roles);
    return granted;
  }

  health(): Promise<{ status: string; version: number }> {
    return this.request("GET", "/api/health");
  }

  summary(): Promise<SummaryPayload> {
    return this.request("GET", "/api/summary");
  }

  registrySummary(registryId: string): Promise<RegistrySummaryPayload> {
    return this.request("GET", `/api/registries/${encodeURIComponent(registryId)}/summary`);
  }

  listEntities(segment: string, limit = 500, offset = 0): Promise<ListPayload> {
    return this.request("GET", `/api/${segment}${queryString({ limit, offset })}`);
  }

  createEntity(segment: string, payload: Record<string, unknown>): Promise<{ entity: EntityPayload; version: number }> {
    return this.request("POST", `/api/${segment}`, { body: payload });
  }

  updateEntity(
    segment: string,
    id: string,
    payload: Record<string, unknown>,
  ): Promise<{ entity: EntityPayload; version: number }> {
    return this.request("PUT", `/api/${segment}/${encodeURIComponent(id)}`, { body: payload });
  }

  deleteEntity(segment: string, id: string, cascade = false): Promise<{ deleted: string; version: number }> {
    const suffix = cascade ? "?cascade=true" : "";
    return this.request("DELETE", `/api/${segment}/${encodeURIComponent(id)}${suffix}`);
  }

  suggest(q: string, kind?: string, signal?: AbortSignal): Promise<SuggestResponse> {
    return this.request("GET", `/api/suggest${queryString({ q, kind })}`, { signal });
  }

  compare(left: string, right: string): Promise<ComparePayload> {
    return this.request("GET", `/api/compat/elements${queryString({ left, right })}`);
  }

  discover(registryIds: string[], minLevel: MinLevel): Promise<DiscoverPayload> {
    return this.request(
      "GET",
      `/api/discover${queryString({ registries: registryIds.join(","), min_level: minLevel })}`,
    );
  }

  commonDomain(
    left: string,
    right: string,
    persist = false,
    label?: string,
  ): Promise<CommonDomainPayload> {
    return this.request("POST", "/api/compat/common-domain", {
      body: { left, right, persist, label },
    });
  }
}
