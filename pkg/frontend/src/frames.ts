// Latest-wins frame fetching for the transition slider: at most one in-flight
// render request; newer requests abort older ones, and a stale response that
// slips through is dropped by sequence number.

export interface FrameResult {
  ok: true;
  url: string;
  bytes: ArrayBuffer;
  etag: string | null;
  meanIou: number | null;
  focusIou: number | null;
}

export interface FrameFailure {
  ok: false;
  aborted: boolean;
  status?: number;
}

function headerNumber(headers: Headers, name: string): number | null {
  const raw = headers.get(name);
  if (raw === null || raw === "null") return null;
  const value = Number(raw);
  return Number.isNaN(value) ? null : value;
}

export class FrameLoader {
  private controller: AbortController | null = null;
  private sequence = 0;
  lastEtag: string | null = null;
  lastBytes: ArrayBuffer | null = null;

  constructor(private readonly fetchFn: typeof fetch = (...args) => fetch(...args)) {}

  async load(url: string): Promise<FrameResult | FrameFailure> {
    this.controller?.abort();
    const controller = new AbortController();
    this.controller = controller;
    const ticket = ++this.sequence;
    let response: Response;
    try {
      response = await this.fetchFn(url, { signal: controller.signal });
    } catch (error) {
      if ((error as Error).name === "AbortError") return { ok: false, aborted: true };
      throw error;
    }
    if (ticket !== this.sequence) return { ok: false, aborted: true };
    if (!response.ok) return { ok: false, aborted: false, status: response.status };
    const bytes = await response.arrayBuffer();
    if (ticket !== this.sequence) return { ok: false, aborted: true };
    this.lastEtag = response.headers.get("etag");
    this.lastBytes = bytes;
    return {
      ok: true,
      url,
      bytes,
      etag: this.lastEtag,
      meanIou: headerNumber(response.headers, "x-mean-iou"),
      focusIou: headerNumber(response.headers, "x-focus-iou"),
    };
  }
}
