// Acceptance (secondary): a rejection round-trip updates exactly the cells
// the server reports as affected, and rejections require a reason before any
// request is sent.

import { beforeEach, describe, expect, it } from "vitest";

import { Api } from "../src/api.js";
import { applyCellUpdates, renderDashboard } from "../src/dashboard.js";
import { cellKey, formatIou } from "../src/format.js";
import type { ComplianceCell, VerdictResponse } from "../src/types.js";
import { createVerdictForm, validateDraft } from "../src/verdicts.js";
import { jsonResponse, mockFetch, samplePayload } from "./helpers.js";

function snapshotCells(root: HTMLElement) {
  const snapshot = new Map<string, { node: HTMLTableCellElement; text: string; classes: string }>();
  for (const td of root.querySelectorAll<HTMLTableCellElement>("td[data-cell]")) {
    snapshot.set(td.dataset.cell!, {
      node: td,
      text: td.textContent ?? "",
      classes: td.className,
    });
  }
  return snapshot;
}

describe("draft validation", () => {
  it("requires a reason only when rejecting", () => {
    expect(validateDraft({ sample_id: "s/night", verdict: "rejected", reason: "", author: "a" }))
      .toBe("a rejection needs a reason");
    expect(validateDraft({ sample_id: "s/night", verdict: "rejected", reason: "  ", author: "a" }))
      .not.toBeNull();
    expect(validateDraft({ sample_id: "s/night", verdict: "accepted", reason: "", author: "a" }))
      .toBeNull();
    expect(validateDraft({ sample_id: "", verdict: "accepted", reason: "", author: "a" }))
      .toBe("select a sample first");
  });
});

describe("rejection round-trip", () => {
  let root: HTMLElement;

  beforeEach(() => {
    document.body.innerHTML = "";
    root = document.createElement("div");
    document.body.appendChild(root);
  });

  function affectedSnowCells(): ComplianceCell[] {
    return [
      { condition: "snow", category_id: 10, iou: 0.5123001, threshold: 0.5, status: "pass" },
      { condition: "snow", category_id: 13, iou: 0.4312, threshold: 0.5, status: "fail" },
      { condition: "snow", category_id: 16, iou: null, threshold: 0.5, status: "insufficient-evidence" },
    ];
  }

  it("updates exactly the server-reported cells", () => {
    const payload = samplePayload();
    renderDashboard(root, payload);
    const before = snapshotCells(root);
    const affected = affectedSnowCells();

    const updated = applyCellUpdates(root, affected);

    expect(new Set(updated)).toEqual(
      new Set(affected.map((c) => cellKey(c.condition, c.category_id))),
    );
    for (const cell of affected) {
      const key = cellKey(cell.condition, cell.category_id);
      const td = root.querySelector<HTMLTableCellElement>(`td[data-cell="${key}"]`)!;
      expect(td).toBe(before.get(key)!.node); // updated in place, not rebuilt
      expect(td.dataset.iou).toBe(String(cell.iou));
      expect(td.textContent).toBe(formatIou(cell.iou));
      expect(td.dataset.status).toBe(cell.status);
    }
    const affectedKeys = new Set(updated);
    for (const [key, snap] of before) {
      if (affectedKeys.has(key)) continue;
      const td = root.querySelector<HTMLTableCellElement>(`td[data-cell="${key}"]`)!;
      expect(td).toBe(snap.node);
      expect(td.textContent).toBe(snap.text);
      expect(td.className).toBe(snap.classes);
    }
  });

  it("form submit posts the draft and applies the response", async () => {
    const payload = samplePayload();
    renderDashboard(root, payload);
    const response: VerdictResponse = {
      effective: { sample_id: "scene04/snow", verdict: "rejected", reason: "artifacts", author: "aud" },
      affected_cells: affectedSnowCells(),
      compliance: { ...payload, overall: "fail" },
    };
    const { fetchFn, calls } = mockFetch([
      (url, init) => (url.endsWith("/verdicts") && init?.method === "POST"
        ? jsonResponse(response)
        : null),
    ]);
    const api = new Api("", fetchFn);

    let applied: VerdictResponse | null = null;
    const handles = createVerdictForm(api, "run1", (r) => {
      applied = r;
      applyCellUpdates(root, r.affected_cells, r.compliance.overall);
    });
    document.body.appendChild(handles.form);
    handles.setSample("scene04/snow");
    (handles.form.querySelector('input[value="rejected"]') as HTMLInputElement).checked = true;
    (handles.form.querySelector('input[name="reason"]') as HTMLInputElement).value = "artifacts";
    handles.form.dispatchEvent(new Event("submit"));
    await new Promise((resolve) => setTimeout(resolve, 0));

    expect(applied).not.toBeNull();
    const post = calls.find((c) => c.url.endsWith("/verdicts"));
    expect(JSON.parse(String(post!.init!.body))).toEqual({
      sample_id: "scene04/snow",
      verdict: "rejected",
      reason: "artifacts",
      author: "auditor",
    });
    const updatedCell = root.querySelector<HTMLTableCellElement>('td[data-cell="snow/13"]')!;
    expect(updatedCell.dataset.status).toBe("fail");
  });

  it("blocks a reasonless rejection before any request", async () => {
    const { fetchFn, calls } = mockFetch([]);
    const api = new Api("", fetchFn);
    const handles = createVerdictForm(api, "run1", () => {
      throw new Error("must not be applied");
    });
    document.body.appendChild(handles.form);
    handles.setSample("scene04/snow");
    (handles.form.querySelector('input[value="rejected"]') as HTMLInputElement).checked = true;
    handles.form.dispatchEvent(new Event("submit"));
    await new Promise((resolve) => setTimeout(resolve, 0));

    expect(calls.length).toBe(0);
    const error = handles.form.querySelector<HTMLElement>('[data-role="error"]')!;
    expect(error.textContent).toBe("a rejection needs a reason");
  });

  it("shows server 4xx errors inline", async () => {
    const { fetchFn } = mockFetch([
      (url, init) => (url.endsWith("/verdicts") && init?.method === "POST"
        ? jsonResponse({ status: 404, code: "unknown-sample", message: "no such sample" }, 404)
        : null),
    ]);
    const api = new Api("", fetchFn);
    const handles = createVerdictForm(api, "run1", () => undefined);
    document.body.appendChild(handles.form);
    handles.setSample("ghost/none");
    (handles.form.querySelector('input[value="rejected"]') as HTMLInputElement).checked = true;
    (handles.form.querySelector('input[name="reason"]') as HTMLInputElement).value = "x";
    handles.form.dispatchEvent(new Event("submit"));
    await new Promise((resolve) => setTimeout(resolve, 0));

    const error = handles.form.querySelector<HTMLElement>('[data-role="error"]')!;
    expect(error.textContent).toBe("no such sample");
    expect(handles.form.classList.contains("failed")).toBe(true);
  });
});
