// View state and small timing helpers. The state only holds selections; all
// displayed numbers come from the last server response.

export interface ViewState {
  run: string | null;
  scene: string | null;
  fromCondition: string;
  toCondition: string | null;
  lambda: number;
  overlay: boolean;
  verdictDraft: { sample_id: string; verdict: "accepted" | "rejected"; reason: string };
}

export function initialViewState(): ViewState {
  return {
    run: null,
    scene: null,
    fromCondition: "original",
    toCondition: null,
    lambda: 0,
    overlay: false,
    verdictDraft: { sample_id: "", verdict: "accepted", reason: "" },
  };
}

export function clampLambda(value: number): number {
  if (Number.isNaN(value)) return 0;
  return Math.min(1, Math.max(0, value));
}

export const RENDER_DEBOUNCE_MS = 150;

export function debounce<Args extends unknown[]>(
  fn: (...args: Args) => void,
  ms: number,
): (...args: Args) => void {
  let timer: ReturnType<typeof setTimeout> | undefined;
  return (...args: Args) => {
    if (timer !== undefined) clearTimeout(timer);
    timer = setTimeout(() => fn(...args), ms);
  };
}
