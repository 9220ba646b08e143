import { ApiError, type ApiClient } from "./api.js";
import type { Slice } from "./charts.js";
import type { PairRow, RegistrySummaryPayload, SummaryPayload } from "./types.js";

export interface DashboardState {
  loading: boolean;
  error: string | null;
  permissionDenied: boolean;
  summary: SummaryPayload | null;
  registry: RegistrySummaryPayload | null;
  registryId: string | null;
}

/** Dashboard view-model.
 *
 * Every displayed figure is copied verbatim from an API payload: the
 * pie mirrors the repository-wide verdict totals of /api/summary, the
 * bars mirror the per-partner shared-concept counts of the selected
 * registry's summary. No arithmetic happens client-side.
 */
export class DashboardViewModel {
  readonly state: DashboardState = {
    loading: false,
    error: null,
    permissionDenied: false,
    summary: null,
    registry: null,
    registryId: null,
  };

  constructor(private readonly api: ApiClient) {}

  async load(registryId?: string): Promise<void> {
    this.state.loading = true;
    this.state.error = null;
    this.state.permissionDenied = false;
    try {
      this.state.summary = await this.api.summary();
      if (registryId) {
        this.state.registry = await this.api.registrySummary(registryId);
        this.state.registryId = registryId;
      } else {
        this.state.registry = null;
        this.state.registryId = null;
      }
    } catch (error) {
      this.state.summary = null;
      this.state.registry = null;
      if (error instanceof ApiError && error.status === 403) {
        this.state.permissionDenied = true;
        this.state.error = error.message;
      } else {
        this.state.error = error instanceof Error ? error.message : String(error);
      }
    } finally {
      this.state.loading = false;
    }
  }

  /** Pie slices: one per verdict, values straight from the summary payload. */
  verdictPie(): Slice[] {
    const compatibility = this.state.summary?.compatibility;
    if (!compatibility) return [];
    return [
      { label: "fully compatible", value: compatibility.fully_compatible_pairs },
      { label: "partially compatible", value: compatibility.partially_compatible_pairs },
      { label: "incompatible", value: compatibility.incompatible_pairs },
    ];
  }

  /** Bars: shared concepts with each other registry, from the registry summary. */
  sharedConceptBars(): Slice[] {
    const registry = this.state.registry;
    if (!registry) return [];
    return registry.pairs.map((pair) => ({
      label: this.partnerName(pair),
      value: pair.shared_concepts,
    }));
  }

  partnerName(pair: PairRow): string {
    return pair.left === this.state.registryId ? pair.right_name : pair.left_name;
  }

  elementCount(): number | null {
    return this.state.registry ? this.state.registry.elements : null;
  }

  isEmptyRegistry(): boolean {
    return this.state.registry !== null && this.state.registry.elements === 0;
  }

  counts(): Record<string, number> {
    return this.state.summary?.counts ?? {};
  }
}
