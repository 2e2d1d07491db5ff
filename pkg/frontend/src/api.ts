import type {
  CategoryEntry,
  ComplianceReport,
  RunInfo,
  SceneSummary,
  SweepReport,
  SweepSummary,
  VerdictResponse,
  VerdictValue,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

async function toApiError(response: Response): Promise<ApiError> {
  try {
    const body = await response.json();
    return new ApiError(response.status, body.code ?? "error", body.message ?? response.statusText);
  } catch {
    return new ApiError(response.status, "error", response.statusText);
  }
}

export interface RenderQuery {
  from: string;
  to: string;
  lambda: number;
  focus?: string;
}

export class Api {
  constructor(
    private readonly base = "",
    private readonly fetchFn: typeof fetch = (...args) => fetch(...args),
  ) {}

  private async getJson<T>(path: string): Promise<T> {
    const response = await this.fetchFn(this.base + path);
    if (!response.ok) throw await toApiError(response);
    return response.json() as Promise<T>;
  }

  listRuns(): Promise<RunInfo[]> {
    return this.getJson("/api/runs");
  }

  registry(): Promise<CategoryEntry[]> {
    return this.getJson("/api/registry");
  }

  scenes(run: string): Promise<SceneSummary[]> {
    return this.getJson(`/api/runs/${run}/scenes`);
  }

  compliance(run: string): Promise<ComplianceReport> {
    return this.getJson(`/api/runs/${run}/compliance`);
  }

  sweeps(run: string): Promise<SweepSummary[]> {
    return this.getJson(`/api/runs/${run}/sweeps`);
  }

  sweep(run: string, scene: string, from: string, to: string): Promise<SweepReport> {
    return this.getJson(`/api/runs/${run}/sweeps/${scene}/${from}/${to}`);
  }

  variantUrl(run: string, scene: string, condition: string): string {
    return `${this.base}/api/runs/${run}/scenes/${scene}/variants/${condition}.png`;
  }

  overlayUrl(run: string, scene: string, condition: string): string {
    return `${this.base}/api/runs/${run}/scenes/${scene}/overlay?variant=${encodeURIComponent(condition)}`;
  }

  renderUrl(run: string, scene: string, query: RenderQuery): string {
    const params = new URLSearchParams({
      from: query.from,
      to: query.to,
      lambda: String(query.lambda),
    });
    if (query.focus !== undefined) params.set("focus", query.focus);
    return `${this.base}/api/runs/${run}/scenes/${scene}/render?${params.toString()}`;
  }

  async submitVerdict(
    run: string,
    body: { sample_id: string; verdict: VerdictValue; reason: string; author: string },
  ): Promise<VerdictResponse> {
    const response = await this.fetchFn(`${this.base}/api/runs/${run}/verdicts`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!response.ok) throw await toApiError(response);
    return response.json() as Promise<VerdictResponse>;
  }
}
