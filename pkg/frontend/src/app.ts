// Browser entry point: login, hash routing, event wiring. Everything it
// shows comes from the view-models, which in turn only hold API payloads.

import { ApiClient, ApiError } from "./api.js";
import { DashboardViewModel } from "./dashboard.js";
import { EditorViewModel } from "./editor.js";
import { ExplorerViewModel } from "./explorer.js";
import { renderDashboard, renderEditor, renderExplorer, escapeHtml } from "./render.js";

function apiBase(): string {
  const meta = document.querySelector<HTMLMetaElement>('meta[name="mdr-api-base"]');
  return meta?.content ?? "";
}

const api = new ApiClient(apiBase());
const root = document.getElementById("app") as HTMLElement;

const dashboard = new DashboardViewModel(api);
const explorer = new ExplorerViewModel(api);
const editors = new Map<string, EditorViewModel>();

const EDITABLE_SEGMENTS = [
  "conceptual-domains",
  "data-element-concepts",
  "value-domains",
  "permissible-values",
];

function editorFor(segment: string): EditorViewModel {
  let editor = editors.get(segment);
  if (!editor) {
    editor = new EditorViewModel(api, segment, { onChange: render });
    editors.set(segment, editor);
  }
  return editor;
}

function nav(): string {
  const links = [
    `<a href="#/dashboard">Dashboard</a>`,
    ...EDITABLE_SEGMENTS.map(
      (segment) => `<a href="#/editor/${segment}">${segment.replace(/-/g, " ")}</a>`,
    ),
    `<a href="#/explorer">Explorer</a>`,
  ];
  return `<nav>${links.join(" | ")} <span class="muted">(${api.roles.join(", ") || "anonymous"})</span></nav>`;
}

function renderLogin(message = ""): void {
  root.innerHTML =
    `<section class="login"><h2>Sign in</h2>` +
    (message ? `<div class="banner banner-error">${escapeHtml(message)}</div>` : "") +
    `<form id="login-form">` +
    `<label>User <input name="username" autocomplete="username"></label>` +
    `<label>Password <input name="password" type="password" autocomplete="current-password"></label>` +
    `<button type="submit">Sign in</button></form></section>`;
  const form = document.getElementById("login-form") as HTMLFormElement;
  form.addEventListener("submit", async (event) => {
    event.preventDefault();
    const data = new FormData(form);
    try {
      await api.login(String(data.get("username") ?? ""), String(data.get("password") ?? ""));
      window.location.hash = "#/dashboard";
      await route();
    } catch (error) {
      renderLogin(error instanceof Error ? error.message : String(error));
    }
  });
}

function bindEditorEvents(editor: EditorViewModel): void {
  const section = root.querySelector(".editor");
  if (!section) return;
  const label = section.querySelector<HTMLInputElement>('input[name="label"]');
  label?.addEventListener("input", () => editor.typeLabel(label.value));
  section.addEventListener("click", async (event) => {
    const target = event.target as HTMLElement;
    const action = target.closest<HTMLElement>("[data-action]")?.dataset["action"];
    if (action === "pick") {
      const index = Number(target.closest<HTMLElement>("[data-index]")?.dataset["index"]);
      editor.chooseSuggestion(index);
      render();
    } else if (action === "use-local") {
      editor.useLocalRef();
      render();
    } else if (action === "submit") {
      await editor.submit();
      render();
    }
  });
}

function bindExplorerEvents(): void {
  const section = root.querySelector(".explorer");
  if (!section) return;
  section.addEventListener("change", async (event) => {
    const target = event.target as HTMLInputElement;
    if (target.dataset["action"] === "toggle-registry") {
      await explorer.toggleRegistry(target.value);
      render();
    } else if (target.dataset["action"] === "set-level") {
      await explorer.setMinLevel(target.value as "full" | "partial");
      render();
    }
  });
  section.addEventListener("click", async (event) => {
    const target = event.target as HTMLElement;
    if (target.dataset["action"] !== "common-domain") return;
    const left = window.prompt("Left element id?") ?? "";
    const right = window.prompt("Right element id?") ?? "";
    if (!left || !right) return;
    try {
      await explorer.createCommonDomain(left, right, false);
    } catch (error) {
      explorer.state.error = error instanceof Error ? error.message : String(error);
    }
    render();
  });
}

let currentPage: "dashboard" | "editor" | "explorer" | null = null;
let currentSegment = "";

function render(): void {
  if (!api.authenticated) return;
  let body = "";
  if (currentPage === "dashboard") body = renderDashboard(dashboard);
  else if (currentPage === "editor") body = renderEditor(editorFor(currentSegment), api.roles);
  else if (currentPage === "explorer") body = renderExplorer(explorer, api.roles);
  root.innerHTML = nav() + body;
  if (currentPage === "editor") bindEditorEvents(editorFor(currentSegment));
  if (currentPage === "explorer") bindExplorerEvents();
  root.querySelector('[data-action="retry"]')?.addEventListener("click", () => route());
}

async function route(): Promise<void> {
  if (!api.authenticated) {
    renderLogin();
    return;
  }
  const hash = window.location.hash || "#/dashboard";
  const [, page = "dashboard", argument = ""] = hash.replace(/^#\//, "").match(/^([^/]*)\/?(.*)$/) ?? [];
  try {
    if (page === "editor" && argument) {
      currentPage = "editor";
      currentSegment = argument;
    } else if (page === "explorer") {
      currentPage = "explorer";
      if (explorer.state.registries.length === 0) await explorer.init();
    } else {
      currentPage = "dashboard";
      await dashboard.load(argument || undefined);
    }
  } catch (error) {
    if (error instanceof ApiError && error.status === 401) {
      api.setToken(null);
      renderLogin("Session expired, sign in again.");
      return;
    }
    throw error;
  }
  render();
}

window.addEventListener("hashchange", () => void route());
void route();
