// Payload shapes of the backend JSON API, mirrored field by field.

export interface OntologyRef {
  ontology: string;
  ontology_id: string;
}

export function sameRef(a: OntologyRef, b: OntologyRef): boolean {
  return a.ontology === b.ontology && a.ontology_id === b.ontology_id;
}

export function refKey(ref: OntologyRef): string {
  return `${ref.ontology}:${ref.ontology_id}`;
}

export interface EntityPayload extends OntologyRef {
  id: string;
  label: string;
  [extra: string]: unknown;
}

export interface ListPayload {
  items: EntityPayload[];
  total: number;
  limit: number;
  offset: number;
  version: number;
}

export interface TokenResponse {
  token: string;
  subject: string;
  roles: string[];
  expires_in: number;
}

export interface Suggestion extends OntologyRef {
  label: string;
  source: string;
  match_kind: string;
  score: number;
}

export interface SuggestResponse {
  query: string;
  portal_reached: boolean;
  suggestions: Suggestion[];
}

export interface RegistryListRow {
  id: string;
  name: string;
  organisation: string | null;
  elements: number;
}

export interface OverlapRow {
  concept: OntologyRef;
  label: string;
  left_elements: string[];
  right_elements: string[];
  best_verdict: string;
}

export interface PairRow {
  left: string;
  right: string;
  left_name: string;
  right_name: string;
  left_elements: number;
  right_elements: number;
  shared_concepts: number;
  fully_compatible_pairs: number;
  partially_compatible_pairs: number;
  incompatible_pairs: number;
  overlaps?: OverlapRow[];
}

export interface SummaryPayload {
  version: number;
  counts: Record<string, number>;
  registries: RegistryListRow[];
  compatibility: {
    fully_compatible_pairs: number;
    partially_compatible_pairs: number;
    incompatible_pairs: number;
    registry_pairs: PairRow[];
  };
  warnings: number;
}

export interface RegistrySummaryPayload {
  registry: { id: string; name: string; [extra: string]: unknown };
  elements: number;
  pairs: PairRow[];
  version: number;
}

export interface FeatureGroup {
  registry_id: string;
  registry_name: string;
  elements: { id: string; storage_path: string }[];
}

export interface Feature {
  concept: OntologyRef;
  label: string;
  level: string;
  elements: FeatureGroup[];
}

export interface DiscoverPayload {
  min_level: string;
  registries: string[];
  features: Feature[];
}

export interface ComparePayload {
  verdict: string;
  detail: string;
  left_element: string;
  right_element: string;
  left_concept: OntologyRef;
  right_concept: OntologyRef;
  shared_values: (OntologyRef & { label: string })[];
}

export interface CommonDomainPayload {
  domain: EntityPayload;
  values: EntityPayload[];
  persisted: boolean;
  version: number;
}

export type MinLevel = "full" | "partial";

// Mutations are open to curators and admins; readers see controls disabled.
export function canMutate(roles: string[]): boolean {
  return roles.includes("curator") || roles.includes("admin");
}
