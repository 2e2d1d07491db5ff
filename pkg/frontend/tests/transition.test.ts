// Acceptance (secondary): slider at the endpoints fetches images that are
// byte-identical to the stored variants (ETag equality), with debounced,
// latest-wins render requests.

import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { Api } from "../src/api.js";
import { FrameLoader } from "../src/frames.js";
import { clampLambda } from "../src/state.js";
import { TransitionView } from "../src/transition.js";
import { mockFetch, pngResponse } from "./helpers.js";

const FROM_BYTES = new Uint8Array([137, 80, 78, 71, 1, 1, 1, 1]);
const TO_BYTES = new Uint8Array([137, 80, 78, 71, 9, 9, 9, 9]);
const MID_BYTES = new Uint8Array([137, 80, 78, 71, 5, 5, 5, 5]);
const FROM_ETAG = '"etag-from-variant"';
const TO_ETAG = '"etag-to-variant"';

function lambdaOf(url: string): string | null {
  const match = /[?&]lambda=([^&]*)/.exec(url);
  return match ? decodeURIComponent(match[1]!) : null;
}

function renderRoutes() {
  return mockFetch([
    (url) => {
      if (!url.includes("/render?")) return null;
      const lambda = Number(lambdaOf(url));
      if (lambda === 0) {
        return pngResponse(FROM_BYTES, FROM_ETAG, { "X-Mean-Iou": "0.93", "X-Focus-Iou": "1.0" });
      }
      if (lambda === 1) {
        return pngResponse(TO_BYTES, TO_ETAG, { "X-Mean-Iou": "0.41", "X-Focus-Iou": "0.0" });
      }
      return pngResponse(MID_BYTES, '"etag-mid"', { "X-Mean-Iou": "0.7", "X-Focus-Iou": "null" });
    },
    (url) => (url.endsWith("/variants/night.png") ? pngResponse(FROM_BYTES, FROM_ETAG) : null),
    (url) => (url.endsWith("/variants/snow.png") ? pngResponse(TO_BYTES, TO_ETAG) : null),
  ]);
}

beforeEach(() => {
  document.body.innerHTML = "";
  // jsdom has no object URLs; the view only assigns them to img.src
  vi.stubGlobal("URL", Object.assign(URL, {
    createObjectURL: vi.fn(() => `blob:mock-${Math.random()}`),
    revokeObjectURL: vi.fn(),
  }));
});

afterEach(() => {
  vi.unstubAllGlobals();
  vi.useRealTimers();
});

describe("slider endpoints match stored variants byte for byte", () => {
  it("lambda 0 fetches bytes with the from-variant's ETag", async () => {
    const { fetchFn } = renderRoutes();
    const api = new Api("", fetchFn);
    const view = new TransitionView(api, "run1", "scene04", "snow", {
      from: "night",
      loader: new FrameLoader(fetchFn),
    });
    document.body.appendChild(view.element);
    await view.fetchFrame(0);

    const variant = await fetchFn(api.variantUrl("run1", "scene04", "night"));
    const variantBytes = new Uint8Array(await variant.arrayBuffer());
    expect(view.loader.lastEtag).toBe(FROM_ETAG);
    expect(view.loader.lastEtag).toBe(variant.headers.get("etag"));
    expect(new Uint8Array(view.loader.lastBytes!)).toEqual(variantBytes);
  });

  it("lambda 1 fetches bytes with the to-variant's ETag", async () => {
    const { fetchFn } = renderRoutes();
    const api = new Api("", fetchFn);
    const view = new TransitionView(api, "run1", "scene04", "snow", {
      from: "night",
      loader: new FrameLoader(fetchFn),
    });
    document.body.appendChild(view.element);
    await view.fetchFrame(1);

    const variant = await fetchFn(api.variantUrl("run1", "scene04", "snow"));
    expect(view.loader.lastEtag).toBe(TO_ETAG);
    expect(view.loader.lastEtag).toBe(variant.headers.get("etag"));
    expect(new Uint8Array(view.loader.lastBytes!)).toEqual(
      new Uint8Array(await variant.arrayBuffer()),
    );
  });

  it("shows the IoU readout straight from response headers", async () => {
    const { fetchFn } = renderRoutes();
    const api = new Api("", fetchFn);
    const view = new TransitionView(api, "run1", "scene04", "snow", {
      from: "night",
      focus: "sky",
      loader: new FrameLoader(fetchFn),
    });
    document.body.appendChild(view.element);
    await view.fetchFrame(1);
    const readout = view.element.querySelector<HTMLElement>('[data-role="readout"]')!;
    expect(readout.dataset.meanIou).toBe("0.41");
    expect(readout.dataset.focusIou).toBe("0");
  });
});

describe("debounced latest-wins rendering", () => {
  it("collapses rapid slider moves into one request", async () => {
    vi.useFakeTimers();
    const { fetchFn, calls } = renderRoutes();
    const api = new Api("", fetchFn);
    const view = new TransitionView(api, "run1", "scene04", "snow", {
      from: "night",
      loader: new FrameLoader(fetchFn),
      debounceMs: 150,
    });
    document.body.appendChild(view.element);

    const slider = view.element.querySelector<HTMLInputElement>('[data-role="slider"]')!;
    for (const value of ["0.2", "0.4", "0.6", "1"]) {
      slider.value = value;
      slider.dispatchEvent(new Event("input"));
      vi.advanceTimersByTime(50); // under the 150 ms debounce window
    }
    vi.advanceTimersByTime(200);
    await vi.runAllTimersAsync();

    const renderCalls = calls.filter((c) => c.url.includes("/render?"));
    expect(renderCalls.length).toBe(1);
    expect(lambdaOf(renderCalls[0]!.url)).toBe("1");
  });

  it("drops a stale response that resolves after a newer request", async () => {
    let releaseFirst: (() => void) | undefined;
    const { fetchFn } = mockFetch([
      (url) => {
        if (lambdaOf(url) === "0.3") {
          return new Promise<Response>((resolve) => {
            releaseFirst = () => resolve(pngResponse(MID_BYTES, '"stale"'));
          });
        }
        return pngResponse(TO_BYTES, TO_ETAG);
      },
    ]);
    const loader = new FrameLoader(fetchFn);
    const first = loader.load("/api/runs/r/scenes/s/render?from=a&to=b&lambda=0.3");
    const second = await loader.load("/api/runs/r/scenes/s/render?from=a&to=b&lambda=1");
    expect(second.ok).toBe(true);
    releaseFirst!();
    const firstResult = await first;
    expect(firstResult.ok).toBe(false);
    expect(loader.lastEtag).toBe(TO_ETAG);
  });

  it("shows a pending state while a render is in flight", async () => {
    vi.useFakeTimers();
    const { fetchFn } = renderRoutes();
    const api = new Api("", fetchFn);
    const view = new TransitionView(api, "run1", "scene04", "snow", {
      from: "night",
      loader: new FrameLoader(fetchFn),
    });
    document.body.appendChild(view.element);
    view.setLambda(0.5);
    expect(view.element.classList.contains("pending")).toBe(true);
    await vi.runAllTimersAsync();
    expect(view.element.classList.contains("pending")).toBe(false);
  });
});

describe("lambda clamping", () => {
  it("clamps into [0,1]", () => {
    expect(clampLambda(-0.5)).toBe(0);
    expect(clampLambda(1.7)).toBe(1);
    expect(clampLambda(0.25)).toBe(0.25);
    expect(clampLambda(Number.NaN)).toBe(0);
  });
});
