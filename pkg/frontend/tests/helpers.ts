// Shared fetch mocking for the UI tests.

import type { ComplianceReport } from "../src/types.js";

export type Route = (url: string, init?: RequestInit) => Response | Promise<Response> | null;

export function mockFetch(routes: Route[]): {
  fetchFn: typeof fetch;
  calls: { url: string; init?: RequestInit }[];
} {
  const calls: { url: string; init?: RequestInit }[] = [];
  const fetchFn = (async (input: RequestInfo | URL, init?: RequestInit) => {
    const url = String(input);
    calls.push({ url, init });
    for (const route of routes) {
      const response = route(url, init);
      if (response !== null) return response;
    }
    return new Response(JSON.stringify({ status: 404, code: "no-route", message: url }), {
      status: 404,
    });
  }) as typeof fetch;
  return { fetchFn, calls };
}

export function pngResponse(bytes: Uint8Array, etag: string, headers: Record<string, string> = {}): Response {
  return new Response(bytes.slice().buffer as ArrayBuffer, {
    status: 200,
    headers: { "Content-Type": "image/png", ETag: etag, ...headers },
  });
}

export function jsonResponse(payload: unknown, status = 200): Response {
  return new Response(JSON.stringify(payload), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

/** A compliance payload with deliberately awkward float values. */
export function samplePayload(): ComplianceReport {
  return {
    overall: "fail",
    default_threshold: 0.5,
    conditions: [
      {
        condition: "night",
        status: "fail",
        total_samples: 5,
        accepted: 5,
        rejected: 0,
        audited: 1,
        audited_fraction: 0.2,
        mean_iou: 0.7381492637,
        macro_all: 0.6402,
        freq_weighted: 0.8113,
      },
      {
        condition: "snow",
        status: "pass",
        total_samples: 5,
        accepted: 5,
        rejected: 0,
        audited: 0,
        audited_fraction: 0,
        mean_iou: 0.934512,
        macro_all: 0.81,
        freq_weighted: 0.92,
      },
    ],
    cells: [
      { condition: "night", category_id: 10, iou: 0.0214285714, threshold: 0.5, status: "fail" },
      { condition: "night", category_id: 16, iou: 0.1542309, threshold: 0.5, status: "fail" },
      { condition: "night", category_id: 13, iou: 0.97253199, threshold: 0.5, status: "pass" },
      { condition: "snow", category_id: 10, iou: 0.88123, threshold: 0.5, status: "pass" },
      { condition: "snow", category_id: 16, iou: null, threshold: 0.5, status: "insufficient-evidence" },
      { condition: "snow", category_id: 13, iou: 0.7999999, threshold: 0.5, status: "pass" },
    ],
  };
}
