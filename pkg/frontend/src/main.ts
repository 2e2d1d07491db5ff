// App shell: hash routing between the run list, gallery, transition view and
// compliance dashboard. All data comes from the audit-service API.

import { Api } from "./api.js";
import { applyCellUpdates, renderDashboard } from "./dashboard.js";
import { renderGallery } from "./gallery.js";
import { TransitionView } from "./transition.js";
import type { ComplianceReport, SweepReport } from "./types.js";
import { createVerdictForm } from "./verdicts.js";

const api = new Api();

function appRoot(): HTMLElement {
  return document.getElementById("app")!;
}

function banner(message: string): void {
  const root = appRoot();
  root.innerHTML = "";
  const box = document.createElement("div");
  box.className = "banner error";
  box.textContent = message;
  root.appendChild(box);
}

function nav(run: string | null): HTMLElement {
  const bar = document.createElement("nav");
  const home = document.createElement("a");
  home.href = "#/";
  home.textContent = "runs";
  bar.appendChild(home);
  if (run !== null) {
    const gallery = document.createElement("a");
    gallery.href = `#/run/${run}`;
    gallery.textContent = `gallery (${run})`;
    bar.appendChild(gallery);
    const dashboard = document.createElement("a");
    dashboard.href = `#/run/${run}/dashboard`;
    dashboard.textContent = "dashboard";
    bar.appendChild(dashboard);
  }
  return bar;
}

async function showRuns(): Promise<void> {
  const runs = await api.listRuns();
  const root = appRoot();
  root.innerHTML = "";
  root.appendChild(nav(null));
  if (runs.length === 0) {
    const empty = document.createElement("p");
    empty.className = "empty-state";
    empty.textContent = "The store has no runs yet.";
    root.appendChild(empty);
    return;
  }
  const list = document.createElement("ul");
  list.className = "runs";
  for (const run of runs) {
    const item = document.createElement("li");
    const link = document.createElement("a");
    link.href = `#/run/${run.run_id}`;
    link.textContent = run.run_id;
    item.appendChild(link);
    item.append(run.has_compliance ? " (compliance ready)" : " (suite only)");
    list.appendChild(item);
  }
  root.appendChild(list);
}

async function complianceOrNull(run: string): Promise<ComplianceReport | null> {
  try {
    return await api.compliance(run);
  } catch {
    return null;
  }
}

async function showGallery(run: string): Promise<void> {
  const [scenes, compliance] = await Promise.all([
    api.scenes(run),
    complianceOrNull(run),
  ]);
  const root = appRoot();
  root.innerHTML = "";
  root.appendChild(nav(run));
  const grid = document.createElement("div");
  renderGallery(grid, scenes, {
    compliance: compliance ?? undefined,
    onVariantClick: (variant) => {
      const scene = variant.sample_id.split("/")[0];
      if (variant.condition !== "original" && scene !== undefined) {
        location.hash = `#/run/${run}/scene/${scene}/${variant.condition}`;
      }
    },
  });
  root.appendChild(grid);
}

async function sweepOrNull(
  run: string,
  scene: string,
  to: string,
): Promise<SweepReport | null> {
  try {
    return await api.sweep(run, scene, "original", to);
  } catch {
    return null;
  }
}

async function showTransition(run: string, scene: string, to: string): Promise<void> {
  const [sweep, registry] = await Promise.all([
    sweepOrNull(run, scene, to),
    api.registry(),
  ]);
  const focus = sweep
    ? registry.find((c) => c.id === sweep.focus_category)?.name
    : undefined;
  const root = appRoot();
  root.innerHTML = "";
  root.appendChild(nav(run));
  const view = new TransitionView(api, run, scene, to, {
    sweep: sweep ?? undefined,
    focus,
  });
  root.appendChild(view.element);

  const dashboardBox = document.createElement("div");
  const verdictForm = createVerdictForm(api, run, (response) => {
    applyCellUpdates(dashboardBox, response.affected_cells, response.compliance.overall);
  });
  verdictForm.setSample(`${scene}/${to}`);
  root.appendChild(verdictForm.form);
  const compliance = await complianceOrNull(run);
  if (compliance !== null) {
    const names = new Map(registry.map((c) => [c.id, c.name]));
    renderDashboard(dashboardBox, compliance, { categoryNames: names });
    root.appendChild(dashboardBox);
  }
  void view.fetchFrame(0);
}

async function showDashboard(run: string): Promise<void> {
  const [report, registry] = await Promise.all([api.compliance(run), api.registry()]);
  const root = appRoot();
  root.innerHTML = "";
  root.appendChild(nav(run));
  const box = document.createElement("div");
  const names = new Map(registry.map((c) => [c.id, c.name]));
  renderDashboard(box, report, {
    categoryNames: names,
    onCellClick: (cell) => {
      location.hash = `#/run/${run}`;
      void cell;
    },
  });
  root.appendChild(box);
}

export async function route(): Promise<void> {
  const hash = location.hash.replace(/^#\/?/, "");
  const parts = hash.split("/").filter((p) => p.length > 0);
  try {
    if (parts.length === 0) return await showRuns();
    if (parts[0] === "run" && parts.length === 2) return await showGallery(parts[1]!);
    if (parts[0] === "run" && parts[2] === "dashboard") return await showDashboard(parts[1]!);
    if (parts[0] === "run" && parts[2] === "scene" && parts.length === 5) {
      return await showTransition(parts[1]!, parts[3]!, parts[4]!);
    }
    return await showRuns();
  } catch (error) {
    banner(`audit service unreachable or errored: ${String(error)}`);
  }
}

if (typeof window !== "undefined" && document.getElementById("app") !== null) {
  window.addEventListener("hashchange", () => void route());
  void route();
}
