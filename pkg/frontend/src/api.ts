/** Typed client for the glowmap HTTP service. */

import type {
  FootprintResponse,
  HotspotsResponse,
  Job,
  OptimizeRequest,
  ProbeValue,
  ScenarioDoc,
  ScenarioEnvelope,
  ScenarioListing,
  SourceRow,
} from "./types.js";

/** Service error body decoded into a throwable. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
    readonly detail?: unknown,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  private readonly base: string;
  private readonly fetchFn: FetchLike;

  constructor(baseUrl: string, fetchFn?: FetchLike) {
    this.base = baseUrl.replace(/\/+$/, "");
    // default to the global fetch, bound so browsers keep their context
    this.fetchFn = fetchFn ?? ((url, init) => fetch(url, init));
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchFn(this.base + path, init);
    if (resp.status === 204) return undefined as T;
    if (!resp.ok) {
      let code = "http_error";
      let message = `${resp.status} ${resp.statusText}`;
      let detail: unknown;
      try {
        const body = await resp.json();
        if (body && typeof body.code === "string") code = body.code;
        if (body && typeof body.message === "string") message = body.message;
        detail = body?.detail;
      } catch {
        // non-JSON error body, keep the generic message
      }
      throw new ApiError(resp.status, code, message, detail);
    }
    return (await resp.json()) as T;
  }

  private postJson<T>(path: string, body: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  health(): Promise<{ name: string; version: string; backend: string }> {
    return this.request("/");
  }

  listScenarios(): Promise<ScenarioListing[]> {
    return this.request("/scenarios");
  }

  getScenario(id: string): Promise<ScenarioEnvelope> {
    return this.request(`/scenarios/${encodeURIComponent(id)}`);
  }

  createScenario(doc: ScenarioDoc): Promise<{ scenario_id: string; revision: number }> {
    return this.postJson("/scenarios", doc);
  }

  deleteScenario(id: string): Promise<void> {
    return this.request(`/scenarios/${encodeURIComponent(id)}`, { method: "DELETE" });
  }

  putSources(
    id: string,
    revision: number,
    sources: SourceRow[],
  ): Promise<{ scenario_id: string; revision: number }> {
    return this.request(`/scenarios/${encodeURIComponent(id)}/sources`, {
      method: "PUT",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ revision, sources }),
    });
  }

  probeValue(id: string, lat: number, lon: number): Promise<ProbeValue> {
    return this.request(
      `/scenarios/${encodeURIComponent(id)}/value?lat=${lat}&lon=${lon}`,
    );
  }

  footprint(
    id: string,
    area: string,
    opts: { kernel?: string; cellSizeM?: number; mountHeightM?: number } = {},
  ): Promise<FootprintResponse> {
    const q = new URLSearchParams({ area });
    if (opts.kernel) q.set("kernel", opts.kernel);
    if (opts.cellSizeM !== undefined) q.set("cell_size_m", String(opts.cellSizeM));
    if (opts.mountHeightM !== undefined) q.set("mount_height_m", String(opts.mountHeightM));
    return this.request(`/scenarios/${encodeURIComponent(id)}/footprint?${q.toString()}`);
  }

  hotspots(id: string, threshold: number): Promise<HotspotsResponse> {
    return this.request(
      `/scenarios/${encodeURIComponent(id)}/hotspots?threshold=${threshold}`,
    );
  }

  submitOptimize(id: string, spec: OptimizeRequest): Promise<{ job_id: string }> {
    return this.postJson(`/scenarios/${encodeURIComponent(id)}/optimize`, spec);
  }

  getJob(jobId: string): Promise<Job> {
    return this.request(`/jobs/${encodeURIComponent(jobId)}`);
  }

  /**
   * Overlay tile URL. The revision is appended as a query parameter so a
   * browser cache entry can never outlive the scenario revision it renders.
   */
  tileUrl(id: string, z: number, x: number, y: number, revision?: number): string {
    const path = `${this.base}/scenarios/${encodeURIComponent(id)}/tiles/${z}/${x}/${y}.png`;
    return revision === undefined ? path : `${path}?rev=${revision}`;
  }
}
