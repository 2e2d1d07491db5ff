// Compliance dashboard: a conditions x categories table mirroring the
// /compliance payload exactly. Updates after a verdict touch only the cells
// the server reported as affected.

import { cellKey, formatFraction, formatIou } from "./format.js";
import type { ComplianceCell, ComplianceReport } from "./types.js";

export interface DashboardOptions {
  categoryNames?: Map<number, string>;
  onCellClick?: (cell: ComplianceCell) => void;
}

function fillCell(td: HTMLTableCellElement, cell: ComplianceCell): void {
  td.dataset.cell = cellKey(cell.condition, cell.category_id);
  td.dataset.iou = String(cell.iou);
  td.dataset.threshold = String(cell.threshold);
  td.dataset.status = cell.status;
  td.className = `cell ${cell.status}`;
  td.textContent = formatIou(cell.iou);
  td.title =
    cell.status === "insufficient-evidence"
      ? "insufficient evidence"
      : `IoU ${cell.iou} vs threshold ${cell.threshold}`;
}

export function renderDashboard(
  root: HTMLElement,
  report: ComplianceReport,
  options: DashboardOptions = {},
): void {
  root.innerHTML = "";
  root.classList.add("dashboard");

  const heading = document.createElement("div");
  heading.className = `overall ${report.overall}`;
  heading.dataset.overall = report.overall;
  heading.textContent = `Overall: ${report.overall}`;
  root.appendChild(heading);

  const categoryIds = [...new Set(report.cells.map((c) => c.category_id))].sort(
    (a, b) => a - b,
  );
  const byKey = new Map(report.cells.map((c) => [cellKey(c.condition, c.category_id), c]));

  const table = document.createElement("table");
  table.className = "compliance";
  const head = table.createTHead().insertRow();
  head.appendChild(document.createElement("th")).textContent = "condition";
  for (const categoryId of categoryIds) {
    const th = document.createElement("th");
    th.textContent = options.categoryNames?.get(categoryId) ?? String(categoryId);
    th.dataset.categoryId = String(categoryId);
    head.appendChild(th);
  }
  head.appendChild(document.createElement("th")).textContent = "audited";

  const body = table.createTBody();
  for (const condition of report.conditions) {
    const row = body.insertRow();
    row.dataset.condition = condition.condition;
    const name = document.createElement("th");
    name.textContent = condition.condition;
    name.className = `condition ${condition.status}`;
    row.appendChild(name);
    for (const categoryId of categoryIds) {
      const td = row.insertCell();
      const cell = byKey.get(cellKey(condition.condition, categoryId));
      if (cell === undefined) {
        td.className = "cell no-data";
        td.textContent = "";
        continue;
      }
      fillCell(td, cell);
      if (options.onCellClick) {
        td.addEventListener("click", () => options.onCellClick?.(cell));
        td.classList.add("clickable");
      }
    }
    const audited = row.insertCell();
    audited.className = "audited";
    audited.dataset.auditedFraction = String(condition.audited_fraction);
    audited.textContent = formatFraction(condition.audited_fraction);
    audited.title = `${condition.audited} of ${condition.total_samples} samples audited, ${condition.rejected} rejected`;
  }
  root.appendChild(table);
}

/** Apply a verdict response's affected cells in place; returns updated keys. */
export function applyCellUpdates(
  root: HTMLElement,
  affected: ComplianceCell[],
  overall?: string,
): string[] {
  const updated: string[] = [];
  for (const cell of affected) {
    const key = cellKey(cell.condition, cell.category_id);
    const td = root.querySelector<HTMLTableCellElement>(
      `td[data-cell="${key.replace(/"/g, '\\"')}"]`,
    );
    if (td === null) continue;
    fillCell(td, cell);
    updated.push(key);
  }
  if (overall !== undefined) {
    const heading = root.querySelector<HTMLElement>(".overall");
    if (heading !== null) {
      heading.dataset.overall = overall;
      heading.className = `overall ${overall}`;
      heading.textContent = `Overall: ${overall}`;
    }
  }
  return updated;
}
