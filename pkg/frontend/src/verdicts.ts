// Verdict drafting and submission. Rejections require a reason before any
// request leaves the browser; server-side 4xx errors are surfaced inline.

import { Api, ApiError } from "./api.js";
import type { VerdictResponse, VerdictValue } from "./types.js";

export interface VerdictDraft {
  sample_id: string;
  verdict: VerdictValue;
  reason: string;
  author: string;
}

export function validateDraft(draft: VerdictDraft): string | null {
  if (!draft.sample_id) return "select a sample first";
  if (draft.verdict === "rejected" && draft.reason.trim() === "") {
    return "a rejection needs a reason";
  }
  return null;
}

export async function submitVerdict(
  api: Api,
  run: string,
  draft: VerdictDraft,
): Promise<VerdictResponse> {
  const problem = validateDraft(draft);
  if (problem !== null) throw new ApiError(0, "invalid-draft", problem);
  return api.submitVerdict(run, draft);
}

export interface VerdictFormHandles {
  form: HTMLFormElement;
  setSample: (sampleId: string) => void;
}

/** Build the verdict form; onApplied receives each successful response. */
export function createVerdictForm(
  api: Api,
  run: string,
  onApplied: (response: VerdictResponse) => void,
): VerdictFormHandles {
  const form = document.createElement("form");
  form.className = "verdict-form";
  form.innerHTML = `
    <span class="sample" data-role="sample"></span>
    <label><input type="radio" name="verdict" value="accepted" checked> accept</label>
    <label><input type="radio" name="verdict" value="rejected"> reject</label>
    <input type="text" name="reason" placeholder="reason (required when rejecting)">
    <input type="text" name="author" placeholder="auditor" value="auditor">
    <button type="submit">record verdict</button>
    <span class="form-error" data-role="error" role="alert"></span>
  `;
  const sampleLabel = form.querySelector<HTMLElement>('[data-role="sample"]')!;
  const errorLabel = form.querySelector<HTMLElement>('[data-role="error"]')!;

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const data = new FormData(form);
    const draft: VerdictDraft = {
      sample_id: sampleLabel.textContent ?? "",
      verdict: (data.get("verdict") as VerdictValue) ?? "accepted",
      reason: String(data.get("reason") ?? ""),
      author: String(data.get("author") ?? ""),
    };
    errorLabel.textContent = "";
    submitVerdict(api, run, draft)
      .then((response) => {
        form.classList.remove("failed");
        onApplied(response);
      })
      .catch((error: unknown) => {
        form.classList.add("failed");
        errorLabel.textContent =
          error instanceof ApiError ? error.message : String(error);
      });
  });

  return {
    form,
    setSample: (sampleId: string) => {
      sampleLabel.textContent = sampleId;
    },
  };
}
