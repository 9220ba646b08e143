import { ApiError, type ApiClient } from "./api.js";
import { SuggestionBox } from "./suggest.js";
import type { EntityPayload, Suggestion } from "./types.js";

export interface ConflictInfo {
  message: string;
  existingId: string | null;
  existingLabel: string | null;
  /** Hash link to the existing item, when it could be resolved. */
  linkHref: string | null;
}

export interface EditorState {
  label: string;
  ontology: string;
  ontologyId: string;
  /** Ontology fields become read-only once a suggestion or LOCAL ref is taken. */
  locked: boolean;
  submitting: boolean;
  created: EntityPayload | null;
  conflict: ConflictInfo | null;
  error: string | null;
  version: number | null;
}

/** Curation form view-model for one entity collection.
 *
 * The suggestion dropdown feeds the ontology fields; what is submitted
 * and stored is always the chosen OntologyRef, never the typed text.
 * A duplicate-key conflict is surfaced inline together with a link to
 * the already existing item.
 */
export class EditorViewModel {
  readonly suggestions: SuggestionBox;
  readonly state: EditorState = {
    label: "",
    ontology: "",
    ontologyId: "",
    locked: false,
    submitting: false,
    created: null,
    conflict: null,
    error: null,
    version: null,
  };

  constructor(
    private readonly api: ApiClient,
    readonly segment: string,
    options: { debounceMs?: number; onChange?: () => void } = {},
  ) {
    this.suggestions = new SuggestionBox(api, {
      debounceMs: options.debounceMs,
      onChange: options.onChange,
    });
  }

  typeLabel(text: string): void {
    this.state.label = text;
    if (this.state.locked && text !== this.suggestions.state.selectedLabel) {
      this.unlock();
    }
    this.suggestions.setQuery(text);
  }

  /** Adopt a dropdown entry: label and ontology reference, fields locked. */
  chooseSuggestion(index: number): Suggestion | null {
    const chosen = this.suggestions.select(index);
    if (!chosen) return null;
    this.state.label = chosen.label;
    this.state.ontology = chosen.ontology;
    this.state.ontologyId = chosen.ontology_id;
    this.state.locked = true;
    return chosen;
  }

  /** No catalogued match: mint a repository-local reference instead. */
  useLocalRef(idGenerator: () => string = () => crypto.randomUUID()): void {
    this.state.ontology = "LOCAL";
    this.state.ontologyId = `local-${idGenerator()}`;
    this.state.locked = true;
  }

  unlock(): void {
    this.state.ontology = "";
    this.state.ontologyId = "";
    this.state.locked = false;
  }

  async submit(extraFields: Record<string, unknown> = {}): Promise<EntityPayload | null> {
    this.state.submitting = true;
    this.state.conflict = null;
    this.state.error = null;
    try {
      const response = await this.api.createEntity(this.segment, {
        ontology: this.state.ontology,
        ontology_id: this.state.ontologyId,
        label: this.state.label,
        ...extraFields,
      });
      this.state.created = response.entity;
      this.state.version = response.version;
      return response.entity;
    } catch (error) {
      if (error instanceof ApiError && error.status === 409) {
        this.state.conflict = await this.resolveConflict(error.message);
      } else {
        this.state.error = error instanceof Error ? error.message : String(error);
      }
      return null;
    } finally {
      this.state.submitting = false;
    }
  }

  /** Look the existing holder of the duplicate reference up by listing
   * the collection; the link lets the curator jump to it. */
  private async resolveConflict(message: string): Promise<ConflictInfo> {
    try {
      const listing = await this.api.listEntities(this.segment);
      const existing = listing.items.find(
        (item) =>
          item.ontology === this.state.ontology &&
          item.ontology_id === this.state.ontologyId,
      );
      if (existing) {
        return {
          message,
          existingId: existing.id,
          existingLabel: existing.label,
          linkHref: `#/item/${this.segment}/${existing.id}`,
        };
      }
    } catch {
      // listing may be forbidden or fail; the message alone still shows
    }
    return { message, existingId: null, existingLabel: null, linkHref: null };
  }

  reset(): void {
    this.state.label = "";
    this.state.ontology = "";
    this.state.ontologyId = "";
    this.state.locked = false;
    this.state.created = null;
    this.state.conflict = null;
    this.state.error = null;
    this.suggestions.clear();
  }
}
