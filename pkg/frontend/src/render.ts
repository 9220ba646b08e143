// HTML string renderers. Pure functions from view-model state to markup;
// app.ts swaps them into the page and binds events afterwards.

import { barChart, barSvg, pieChart, pieSvg } from "./charts.js";
import type { DashboardViewModel } from "./dashboard.js";
import type { EditorViewModel } from "./editor.js";
import type { ExplorerViewModel } from "./explorer.js";
import { canMutate } from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

function banner(kind: "error" | "permission", message: string): string {
  const note =
    kind === "permission"
      ? "Your role does not allow this view."
      : "The repository could not answer.";
  return (
    `<div class="banner banner-${kind}"><strong>${note}</strong> ` +
    `${escapeHtml(message)} <button data-action="retry">Retry</button></div>`
  );
}

export function renderDashboard(vm: DashboardViewModel): string {
  const state = vm.state;
  if (state.permissionDenied) return banner("permission", state.error ?? "");
  if (state.error) return banner("error", state.error);
  if (!state.summary) return `<p class="muted">Loading…</p>`;

  const counts = Object.entries(vm.counts())
    .map(([key, value]) => `<li>${escapeHtml(key.replace(/_/g, " "))}: <b>${value}</b></li>`)
    .join("");
  const registries = state.summary.registries
    .map(
      (registry) =>
        `<li><a href="#/dashboard/${registry.id}">${escapeHtml(registry.name)}</a>` +
        ` · ${registry.elements} element(s)</li>`,
    )
    .join("");
  const pie = pieSvg(pieChart(vm.verdictPie()));
  const legend = vm
    .verdictPie()
    .map((slice) => `<li>${escapeHtml(slice.label)}: <b>${slice.value}</b></li>`)
    .join("");

  let registryBlock = "";
  if (state.registry) {
    const name = escapeHtml(String(state.registry.registry["name"]));
    registryBlock = vm.isEmptyRegistry()
      ? `<h3>${name}</h3><p class="muted">This registry has no data elements yet.</p>` +
        barSvg(barChart([]))
      : `<h3>${name}</h3><p>${state.registry.elements} element(s)</p>` +
        `<h4>Shared concepts with other registries</h4>` +
        barSvg(barChart(vm.sharedConceptBars())) +
        `<ul>` +
        vm
          .sharedConceptBars()
          .map((bar) => `<li>${escapeHtml(bar.label)}: <b>${bar.value}</b></li>`)
          .join("") +
        `</ul>`;
  }

  return (
    `<section class="dashboard">` +
    `<h2>Repository</h2><ul class="counts">${counts}</ul>` +
    `<h3>Registries</h3><ul>${registries}</ul>` +
    `<h3>Compatible pairs</h3>${pie}<ul class="legend">${legend}</ul>` +
    registryBlock +
    `</section>`
  );
}

export function renderEditor(vm: EditorViewModel, roles: string[]): string {
  const state = vm.state;
  const writable = canMutate(roles);
  const lock = state.locked ? "readonly" : "";
  const dropdown = vm.suggestions.state.open
    ? `<ul class="suggestions">` +
      vm.suggestions.state.suggestions
        .map(
          (s, i) =>
            `<li data-index="${i}"><button data-action="pick" data-index="${i}">` +
            `${escapeHtml(s.label)} <span class="muted">${escapeHtml(s.ontology)}:` +
            `${escapeHtml(s.ontology_id)} (${escapeHtml(s.match_kind)})</span></button></li>`,
        )
        .join("") +
      `</ul>`
    : "";
  const conflict = state.conflict
    ? `<div class="banner banner-conflict">${escapeHtml(state.conflict.message)}` +
      (state.conflict.linkHref
        ? ` <a href="${state.conflict.linkHref}">Open the existing item` +
          (state.conflict.existingLabel
            ? ` (${escapeHtml(state.conflict.existingLabel)})`
            : "") +
          `</a>`
        : "") +
      `</div>`
    : "";
  const created = state.created
    ? `<p class="ok">Created <b>${escapeHtml(state.created.label)}</b> as ` +
      `${escapeHtml(state.created.ontology)}:${escapeHtml(state.created.ontology_id)}</p>`
    : "";
  const error = state.error ? banner("error", state.error) : "";

  // mutating controls are disabled, never hidden, for read-only sessions
  const disabled = writable ? "" : "disabled";
  return (
    `<section class="editor">` +
    `<h2>New ${escapeHtml(vm.segment.replace(/-/g, " "))}</h2>` +
    `<label>Label <input name="label" value="${escapeHtml(state.label)}" ` +
    `autocomplete="off" ${disabled}></label>` +
    dropdown +
    `<label>Ontology <input name="ontology" value="${escapeHtml(state.ontology)}" ${lock} ${disabled}></label>` +
    `<label>Ontology id <input name="ontology_id" value="${escapeHtml(state.ontologyId)}" ${lock} ${disabled}></label>` +
    `<button data-action="use-local" ${disabled}>Create as LOCAL</button>` +
    `<button data-action="submit" ${disabled} ${state.submitting ? "aria-busy=true" : ""}>Create</button>` +
    conflict +
    created +
    error +
    `</section>`
  );
}

export function renderExplorer(vm: ExplorerViewModel, roles: string[]): string {
  const state = vm.state;
  const writable = canMutate(roles);
  const disabled = writable ? "" : "disabled";
  const checkboxes = state.registries
    .map(
      (registry) =>
        `<label><input type="checkbox" data-action="toggle-registry" ` +
        `value="${registry.id}" ${state.selected.has(registry.id) ? "checked" : ""}>` +
        `${escapeHtml(registry.name)}</label>`,
    )
    .join("");
  const levels = (["full", "partial"] as const)
    .map(
      (level) =>
        `<label><input type="radio" name="min-level" data-action="set-level" ` +
        `value="${level}" ${state.minLevel === level ? "checked" : ""}>at least ${level}</label>`,
    )
    .join("");

  const rows = vm.rows();
  const table =
    state.selected.size < 2
      ? `<p class="muted">Pick at least two registries.</p>`
      : rows.length === 0
        ? `<p class="muted">No shared features at this level.</p>`
        : `<table class="features"><thead><tr><th>Feature</th><th>Concept</th>` +
          `<th>Level</th><th>Elements</th></tr></thead><tbody>` +
          rows
            .map(
              (row) =>
                `<tr><td>${escapeHtml(row.label)}</td><td>${escapeHtml(row.concept)}</td>` +
                `<td>${escapeHtml(row.level)}</td><td>` +
                row.registries
                  .map(
                    (group) =>
                      `${escapeHtml(group.name)}: ${group.paths.map(escapeHtml).join(", ")}`,
                  )
                  .join("<br>") +
                `</td></tr>`,
            )
            .join("") +
          `</tbody></table>`;

  const matrix =
    `<h3>Registry pairs</h3><table class="matrix"><thead><tr><th>Pair</th>` +
    `<th>Shared</th><th>Full</th><th>Partial</th><th>Incompatible</th></tr></thead><tbody>` +
    state.matrix
      .map(
        (pair) =>
          `<tr><td>${escapeHtml(pair.left_name)} × ${escapeHtml(pair.right_name)}</td>` +
          `<td>${pair.shared_concepts}</td><td>${pair.fully_compatible_pairs}</td>` +
          `<td>${pair.partially_compatible_pairs}</td><td>${pair.incompatible_pairs}</td></tr>`,
      )
      .join("") +
    `</tbody></table>`;

  const common = state.commonDomain
    ? `<div class="banner banner-ok">Common domain “${escapeHtml(state.commonDomain.domain.label)}” ` +
      `holds ${state.commonDomain.values.length} value(s)` +
      `${state.commonDomain.persisted ? " (persisted)" : ""}.</div>`
    : "";
  const error = state.error ? banner("error", state.error) : "";

  return (
    `<section class="explorer">` +
    `<h2>Feature discovery</h2>` +
    `<fieldset><legend>Registries</legend>${checkboxes}</fieldset>` +
    `<fieldset><legend>Minimum level</legend>${levels}</fieldset>` +
    table +
    `<button data-action="common-domain" ${disabled}>Create temporary common domain…</button>` +
    common +
    matrix +
    error +
    `</section>`
  );
}
