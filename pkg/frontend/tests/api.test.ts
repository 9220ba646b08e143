import { describe, expect, it } from "vitest";

import { ApiClient, ApiError, joinUrl } from "../src/api.js";
import type { SuggestResponse, TokenResponse } from "../src/types.js";
import { FetchMock, fixture } from "./helpers.js";

const tokenFixture = fixture<TokenResponse>("token.json");
const unauthorized = fixture<{ error: string; message: string }>("unauthorized_401.json");
const forbidden = fixture<{ error: string; message: string }>("forbidden_403.json");
const conflict = fixture<{ error: string; message: string }>("conflict_409.json");

describe("joinUrl", () => {
  it("joins a base with a path exactly once", () => {
    expect(joinUrl("http://x:1", "/api/health")).toBe("http://x:1/api/health");
    expect(joinUrl("http://x:1/", "/api/health")).toBe("http://x:1/api/health");
    expect(joinUrl("", "/api/health")).toBe("/api/health");
  });
});

describe("ApiClient", () => {
  it("stores the token and roles after login and sends a Bearer header", async () => {
    const mock = new FetchMock()
      .on("POST", "/api/auth/token", tokenFixture)
      .on("GET", "/api/health", { status: "ok", version: 1 });
    const api = new ApiClient("http://mdr.test", mock.fn);
    expect(api.authenticated).toBe(false);

    const granted = await api.login("admin-demo", "admin-demo");
    expect(granted).toEqual(tokenFixture);
    expect(api.authenticated).toBe(true);
    expect(api.roles).toEqual(tokenFixture.roles);

    await api.health();
    const healthCall = mock.callsTo("/api/health")[0]!;
    expect(healthCall.headers["Authorization"]).toBe(`Bearer ${tokenFixture.token}`);
    expect(healthCall.url.origin).toBe("http://mdr.test");
  });

  it("sends no Authorization header before login", async () => {
    const mock = new FetchMock().on("GET", "/api/health", { status: "ok" });
    const api = new ApiClient("", mock.fn);
    await api.health();
    expect("Authorization" in mock.calls[0]!.headers).toBe(false);
  });

  it("raises ApiError carrying the server's flat error body", async () => {
    const mock = new FetchMock()
      .on("GET", "/api/data-elements", unauthorized, 401)
      .on("GET", "/api/export", forbidden, 403)
      .on("POST", "/api/data-element-concepts", conflict, 409);
    const api = new ApiClient("", mock.fn);

    const err401 = await api.listEntities("data-elements").catch((e: unknown) => e);
    expect(err401).toBeInstanceOf(ApiError);
    expect((err401 as ApiError).status).toBe(401);
    expect((err401 as ApiError).code).toBe(unauthorized.error);
    expect((err401 as ApiError).message).toBe(unauthorized.message);

    const err409 = await api
      .createEntity("data-element-concepts", { label: "x" })
      .catch((e: unknown) => e);
    expect((err409 as ApiError).status).toBe(409);
    expect((err409 as ApiError).code).toBe("duplicate_ontology_key");
  });

  it("falls back to a generic code when the error body is not JSON", async () => {
    const api = new ApiClient("", async () => new Response("boom", { status: 500 }));
    const err = await api.summary().catch((e: unknown) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).status).toBe(500);
    expect((err as ApiError).code).toBe("http_error");
  });

  it("builds query strings for suggest and discover", async () => {
    const suggestPayload: SuggestResponse = {
      query: "gau ch",
      suggestions: [],
      portal_reached: true,
    };
    const mock = new FetchMock()
      .on("GET", "/api/suggest", suggestPayload)
      .on("GET", "/api/discover", { min_level: "full", registries: [], features: [] });
    const api = new ApiClient("", mock.fn);

    await api.suggest("gau ch", "data_element_concept");
    const suggestCall = mock.callsTo("/api/suggest")[0]!;
    expect(suggestCall.url.searchParams.get("q")).toBe("gau ch");
    expect(suggestCall.url.searchParams.get("kind")).toBe("data_element_concept");

    await api.discover(["r2", "r1"], "full");
    const discoverCall = mock.callsTo("/api/discover")[0]!;
    expect(discoverCall.url.searchParams.get("registries")).toBe("r2,r1");
    expect(discoverCall.url.searchParams.get("min_level")).toBe("full");
  });

  it("serialises create bodies as JSON with the content-type header", async () => {
    const mock = new FetchMock().on("POST", "/api/registries", { entity: {}, version: 1 }, 201);
    const api = new ApiClient("", mock.fn);
    await api.createEntity("registries", { name: "West Clinic" });
    const call = mock.calls[0]!;
    expect(call.headers["Content-Type"]).toBe("application/json");
    expect(call.body).toEqual({ name: "West Clinic" });
  });

  it("passes cascade through to delete", async () => {
    const mock = new FetchMock().onFn("DELETE", /^\/api\/permissible-values\//, (url) => ({
      status: 200,
      payload: { deleted: url.pathname.split("/").pop(), cascade: url.searchParams.get("cascade") },
    }));
    const api = new ApiClient("", mock.fn);
    await api.deleteEntity("permissible-values", "pv1", true);
    expect(mock.calls[0]!.url.searchParams.get("cascade")).toBe("true");
  });
});
