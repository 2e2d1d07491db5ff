// Scenes x conditions gallery with IoU badges and verdict markers.

import { formatIou } from "./format.js";
import type { ComplianceReport, SceneSummary, VariantSummary } from "./types.js";

export interface GalleryOptions {
  onVariantClick?: (variant: VariantSummary) => void;
  compliance?: ComplianceReport;
}

function failingConditions(report: ComplianceReport | undefined): Set<string> {
  if (!report) return new Set();
  return new Set(report.cells.filter((c) => c.status === "fail").map((c) => c.condition));
}

export function renderGallery(
  root: HTMLElement,
  scenes: SceneSummary[],
  options: GalleryOptions = {},
): void {
  root.innerHTML = "";
  root.classList.add("gallery");
  if (scenes.length === 0) {
    const empty = document.createElement("p");
    empty.className = "empty-state";
    empty.textContent = "No evaluated scenes in this run yet. Run the suite first.";
    root.appendChild(empty);
    return;
  }
  const failing = failingConditions(options.compliance);
  const conditions = scenes[0]!.variants.map((v) => v.condition);

  const table = document.createElement("table");
  const head = table.createTHead().insertRow();
  head.appendChild(document.createElement("th")).textContent = "scene";
  for (const condition of conditions) {
    const th = document.createElement("th");
    th.textContent = condition;
    if (failing.has(condition)) th.classList.add("failing");
    head.appendChild(th);
  }

  const body = table.createTBody();
  for (const scene of scenes) {
    const row = body.insertRow();
    const name = document.createElement("th");
    name.textContent = scene.scene_id;
    row.appendChild(name);
    for (const condition of conditions) {
      const variant = scene.variants.find((v) => v.condition === condition);
      const td = row.insertCell();
      if (variant === undefined) continue;
      td.appendChild(variantTile(variant, options));
    }
  }
  root.appendChild(table);
}

function variantTile(variant: VariantSummary, options: GalleryOptions): HTMLElement {
  const tile = document.createElement("figure");
  tile.className = `variant ${variant.verdict}`;
  tile.dataset.sampleId = variant.sample_id;

  const image = document.createElement("img");
  image.loading = "lazy";
  image.src = variant.image_url;
  image.alt = variant.sample_id;
  tile.appendChild(image);

  const badge = document.createElement("figcaption");
  badge.className = "badge";
  badge.dataset.meanIou = String(variant.mean_iou);
  if (variant.error !== null) {
    badge.textContent = "failed";
    badge.classList.add("error");
    badge.title = variant.error;
  } else {
    badge.textContent = formatIou(variant.mean_iou);
  }
  if (variant.verdict === "rejected") badge.classList.add("struck");
  if (variant.audited) badge.classList.add("audited");
  tile.appendChild(badge);

  if (options.onVariantClick) {
    tile.addEventListener("click", () => options.onVariantClick?.(variant));
    tile.classList.add("clickable");
  }
  return tile;
}
