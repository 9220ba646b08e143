import { type ApiClient } from "./api.js";
import type {
  CommonDomainPayload,
  DiscoverPayload,
  Feature,
  MinLevel,
  PairRow,
  RegistryListRow,
} from "./types.js";
import { refKey } from "./types.js";

export interface FeatureRow {
  concept: string;
  label: string;
  level: string;
  /** registry name -> storage paths, exactly as grouped by the API */
  registries: { name: string; paths: string[] }[];
}

export interface ExplorerState {
  registries: RegistryListRow[];
  selected: Set<string>;
  minLevel: MinLevel;
  response: DiscoverPayload | null;
  matrix: PairRow[];
  loading: boolean;
  error: string | null;
  commonDomain: CommonDomainPayload | null;
}

/** What-if discovery view-model.
 *
 * The feature table is a row-for-row projection of the last
 * /api/discover response; toggling registries or the minimum level
 * refetches rather than filtering client-side.
 */
export class ExplorerViewModel {
  readonly state: ExplorerState = {
    registries: [],
    selected: new Set(),
    minLevel: "partial",
    response: null,
    matrix: [],
    loading: false,
    error: null,
    commonDomain: null,
  };

  constructor(private readonly api: ApiClient) {}

  async init(): Promise<void> {
    const summary = await this.api.summary();
    this.state.registries = summary.registries;
    this.state.matrix = summary.compatibility.registry_pairs;
  }

  async toggleRegistry(registryId: string): Promise<void> {
    if (this.state.selected.has(registryId)) {
      this.state.selected.delete(registryId);
    } else {
      this.state.selected.add(registryId);
    }
    await this.refresh();
  }

  async setMinLevel(level: MinLevel): Promise<void> {
    this.state.minLevel = level;
    await this.refresh();
  }

  async refresh(): Promise<void> {
    if (this.state.selected.size < 2) {
      this.state.response = null;
      return;
    }
    this.state.loading = true;
    this.state.error = null;
    try {
      this.state.response = await this.api.discover(
        [...this.state.selected].sort(),
        this.state.minLevel,
      );
    } catch (error) {
      this.state.response = null;
      this.state.error = error instanceof Error ? error.message : String(error);
    } finally {
      this.state.loading = false;
    }
  }

  /** Table rows, one per discovered feature, straight off the payload. */
  rows(): FeatureRow[] {
    const features = this.state.response?.features ?? [];
    return features.map((feature: Feature) => ({
      concept: refKey(feature.concept),
      label: feature.label,
      level: feature.level,
      registries: feature.elements.map((group) => ({
        name: group.registry_name,
        paths: group.elements.map((element) => element.storage_path),
      })),
    }));
  }

  async createCommonDomain(
    leftElementId: string,
    rightElementId: string,
    persist = false,
    label?: string,
  ): Promise<CommonDomainPayload> {
    const result = await this.api.commonDomain(leftElementId, rightElementId, persist, label);
    this.state.commonDomain = result;
    return result;
  }
}
