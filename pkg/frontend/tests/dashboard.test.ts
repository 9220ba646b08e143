import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { DashboardViewModel } from "../src/dashboard.js";
import type { RegistrySummaryPayload, SummaryPayload } from "../src/types.js";
import { FetchMock, fixture } from "./helpers.js";

const summary = fixture<SummaryPayload>("summary.json");
const registrySummary = fixture<RegistrySummaryPayload>("registry_summary_charite.json");
const forbidden = fixture<{ error: string; message: string }>("forbidden_403.json");

function makeDashboard(mock: FetchMock): DashboardViewModel {
  return new DashboardViewModel(new ApiClient("", mock.fn));
}

describe("DashboardViewModel", () => {
  it("mirrors the summary payload field for field", async () => {
    const mock = new FetchMock().on("GET", "/api/summary", summary);
    const vm = makeDashboard(mock);
    await vm.load();

    expect(vm.state.summary).toEqual(summary);
    expect(vm.counts()).toEqual(summary.counts);

    // pie values are the payload's verdict totals, in verdict order
    expect(vm.verdictPie()).toEqual([
      { label: "fully compatible", value: summary.compatibility.fully_compatible_pairs },
      { label: "partially compatible", value: summary.compatibility.partially_compatible_pairs },
      { label: "incompatible", value: summary.compatibility.incompatible_pairs },
    ]);
    expect(vm.verdictPie().map((s) => s.value)).toEqual([3, 1, 0]);
    expect(vm.state.summary!.compatibility.registry_pairs).toEqual(
      summary.compatibility.registry_pairs,
    );
    expect(vm.state.summary!.warnings).toBe(summary.warnings);
    expect(vm.state.summary!.registries).toEqual(summary.registries);
  });

  it("bars mirror the selected registry's shared-concept counts per partner", async () => {
    const registryId = registrySummary.registry.id as string;
    const mock = new FetchMock()
      .on("GET", "/api/summary", summary)
      .on("GET", `/api/registries/${registryId}/summary`, registrySummary);
    const vm = makeDashboard(mock);
    await vm.load(registryId);

    expect(vm.state.registry).toEqual(registrySummary);
    expect(vm.elementCount()).toBe(registrySummary.elements);
    expect(vm.isEmptyRegistry()).toBe(false);

    const expected = registrySummary.pairs.map((pair) => ({
      label: pair.left === registryId ? pair.right_name : pair.left_name,
      value: pair.shared_concepts,
    }));
    expect(vm.sharedConceptBars()).toEqual(expected);
    expect(vm.sharedConceptBars().map((b) => b.label)).toEqual([
      "Medical University of Vienna",
      "Rigshospitalet Copenhagen",
    ]);
    expect(vm.sharedConceptBars().map((b) => b.value)).toEqual([1, 2]);
  });

  it("labels bars with the partner when the registry sits on the right", async () => {
    const flipped: RegistrySummaryPayload = {
      ...registrySummary,
      registry: { id: "r-right", name: "Right Side", organisation: null },
      pairs: [
        {
          ...registrySummary.pairs[0]!,
          left: "r-left",
          left_name: "Left Partner",
          right: "r-right",
          right_name: "Right Side",
        },
      ],
    };
    const mock = new FetchMock()
      .on("GET", "/api/summary", summary)
      .on("GET", "/api/registries/r-right/summary", flipped);
    const vm = makeDashboard(mock);
    await vm.load("r-right");
    expect(vm.sharedConceptBars().map((b) => b.label)).toEqual(["Left Partner"]);
  });

  it("flags an empty registry instead of charting nothing silently", async () => {
    const empty: RegistrySummaryPayload = {
      elements: 0,
      pairs: [],
      registry: { id: "r-empty", name: "Empty Registry", organisation: null },
      version: 1,
    };
    const mock = new FetchMock()
      .on("GET", "/api/summary", summary)
      .on("GET", "/api/registries/r-empty/summary", empty);
    const vm = makeDashboard(mock);
    await vm.load("r-empty");
    expect(vm.isEmptyRegistry()).toBe(true);
    expect(vm.sharedConceptBars()).toEqual([]);
  });

  it("marks permission denial distinctly from other failures", async () => {
    const mock = new FetchMock().on("GET", "/api/summary", forbidden, 403);
    const vm = makeDashboard(mock);
    await vm.load();
    expect(vm.state.permissionDenied).toBe(true);
    expect(vm.state.error).toBe(forbidden.message);
    expect(vm.verdictPie()).toEqual([]);
    expect(vm.sharedConceptBars()).toEqual([]);
  });

  it("reports other failures without the permission flag", async () => {
    const mock = new FetchMock().on(
      "GET",
      "/api/summary",
      { error: "storage_error", message: "store unavailable" },
      500,
    );
    const vm = makeDashboard(mock);
    await vm.load();
    expect(vm.state.permissionDenied).toBe(false);
    expect(vm.state.error).toBe("store unavailable");
    expect(vm.state.summary).toBeNull();
  });
});
