import { readFileSync } from "node:fs";

import type { FetchLike } from "../src/api.js";

export function fixture<T>(name: string): T {
  const path = new URL(`./fixtures/${name}`, import.meta.url);
  return JSON.parse(readFileSync(path, "utf-8")) as T;
}

export interface RecordedCall {
  method: string;
  url: URL;
  path: string;
  body: unknown;
  headers: Record<string, string>;
}

interface Route {
  method: string;
  pattern: string | RegExp;
  respond: (url: URL, call: RecordedCall) => { status: number; payload: unknown };
}

/** Records requests and answers them from registered routes; the
 * most recently registered matching route wins, so tests can override
 * a happy-path response with an error for a later call. */
export class FetchMock {
  calls: RecordedCall[] = [];
  private routes: Route[] = [];

  on(method: string, pattern: string | RegExp, payload: unknown, status = 200): this {
    this.routes.push({ method, pattern, respond: () => ({ status, payload }) });
    return this;
  }

  onFn(
    method: string,
    pattern: string | RegExp,
    respond: (url: URL, call: RecordedCall) => { status: number; payload: unknown },
  ): this {
    this.routes.push({ method, pattern, respond });
    return this;
  }

  callsTo(path: string): RecordedCall[] {
    return this.calls.filter((call) => call.path === path);
  }

  get fn(): FetchLike {
    return async (input: string, init?: RequestInit) => {
      const url = new URL(input, "http://mock.test");
      const method = (init?.method ?? "GET").toUpperCase();
      const call: RecordedCall = {
        method,
        url,
        path: url.pathname,
        body: typeof init?.body === "string" ? JSON.parse(init.body) : undefined,
        headers: (init?.headers ?? {}) as Record<string, string>,
      };
      this.calls.push(call);
      for (let i = this.routes.length - 1; i >= 0; i--) {
        const route = this.routes[i]!;
        if (route.method !== method) continue;
        const matches =
          typeof route.pattern === "string"
            ? route.pattern === url.pathname
            : route.pattern.test(url.pathname);
        if (!matches) continue;
        const { status, payload } = route.respond(url, call);
        return jsonResponse(payload, status);
      }
      return jsonResponse({ error: "not_found", message: `no route for ${method} ${url.pathname}` }, 404);
    };
  }
}

export function jsonResponse(payload: unknown, status = 200): Response {
  return new Response(JSON.stringify(payload), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

export function deferred<T>(): { promise: Promise<T>; resolve: (value: T) => void } {
  let resolve!: (value: T) => void;
  const promise = new Promise<T>((r) => {
    resolve = r;
  });
  return { promise, resolve };
}
