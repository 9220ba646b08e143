import type { ApiClient } from "./api.js";
import { Debouncer, LatestGuard } from "./debounce.js";
import type { OntologyRef, Suggestion } from "./types.js";
import { refKey } from "./types.js";

export const MIN_QUERY_LENGTH = 2;
export const DEBOUNCE_MS = 300;

export interface SuggestionBoxState {
  query: string;
  suggestions: Suggestion[];
  open: boolean;
  loading: boolean;
  portalReached: boolean;
  error: string | null;
  /** Locked ontology reference once a suggestion is chosen. */
  selected: OntologyRef | null;
  selectedLabel: string | null;
}

export interface SuggestionBoxOptions {
  kind?: string;
  debounceMs?: number;
  onChange?: () => void;
}

/** View-model of the autosuggestion dropdown.
 *
 * Queries are debounced and stale responses dropped, entries are unique
 * per ontology reference, and choosing an entry stores the reference
 * itself, never the typed text. Typing again unlocks the selection.
 */
export class SuggestionBox {
  readonly state: SuggestionBoxState = {
    query: "",
    suggestions: [],
    open: false,
    loading: false,
    portalReached: false,
    error: null,
    selected: null,
    selectedLabel: null,
  };

  private readonly debouncer: Debouncer;
  private readonly guard = new LatestGuard();
  private readonly kind: string | undefined;
  private readonly onChange: () => void;
  /** Last dispatched lookup; tests await it to observe settled state. */
  lastLookup: Promise<void> = Promise.resolve();

  constructor(private readonly api: ApiClient, options: SuggestionBoxOptions = {}) {
    this.debouncer = new Debouncer(options.debounceMs ?? DEBOUNCE_MS);
    this.kind = options.kind;
    this.onChange = options.onChange ?? (() => {});
  }

  setQuery(query: string): void {
    this.state.query = query;
    if (this.state.selected && query !== this.state.selectedLabel) {
      this.state.selected = null; // typing unlocks the previous choice
      this.state.selectedLabel = null;
    }
    if (query.trim().length < MIN_QUERY_LENGTH) {
      this.debouncer.cancel();
      this.guard.issue(); // orphan any in-flight lookup
      this.state.suggestions = [];
      this.state.open = false;
      this.state.loading = false;
      this.state.error = null;
      this.onChange();
      return;
    }
    this.state.loading = true;
    this.debouncer.schedule(() => {
      this.lastLookup = this.refresh(query);
    });
    this.onChange();
  }

  /** Immediate lookup, bypassing the debounce; newest call wins. */
  async refresh(query: string): Promise<void> {
    const ticket = this.guard.issue();
    try {
      const response = await this.api.suggest(query, this.kind);
      if (!this.guard.accepts(ticket)) return;
      this.state.suggestions = dedupeByRef(response.suggestions);
      this.state.portalReached = response.portal_reached;
      this.state.open = this.state.suggestions.length > 0;
      this.state.error = null;
    } catch (error) {
      if (!this.guard.accepts(ticket)) return;
      this.state.suggestions = [];
      this.state.open = false;
      this.state.error = error instanceof Error ? error.message : String(error);
    } finally {
      if (this.guard.accepts(ticket)) {
        this.state.loading = false;
        this.onChange();
      }
    }
  }

  select(index: number): Suggestion | null {
    const chosen = this.state.suggestions[index];
    if (!chosen) return null;
    this.state.selected = { ontology: chosen.ontology, ontology_id: chosen.ontology_id };
    this.state.selectedLabel = chosen.label;
    this.state.query = chosen.label;
    this.state.open = false;
    this.onChange();
    return chosen;
  }

  clear(): void {
    this.debouncer.cancel();
    this.guard.issue();
    this.state.query = "";
    this.state.suggestions = [];
    this.state.open = false;
    this.state.loading = false;
    this.state.error = null;
    this.state.selected = null;
    this.state.selectedLabel = null;
    this.onChange();
  }
}

export function dedupeByRef(suggestions: Suggestion[]): Suggestion[] {
  const seen = new Set<string>();
  const unique: Suggestion[] = [];
  for (const entry of suggestions) {
    const key = refKey(entry);
    if (seen.has(key)) continue;
    seen.add(key);
    unique.push(entry);
  }
  return unique;
}
