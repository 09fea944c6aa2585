/** Wire types for the glowmap service. Shapes mirror the HTTP responses. */

export interface SourceRow {
  id: string;
  lat: number;
  lon: number;
  profile_id?: number | null;
  params?: {
    c1: number;
    c2: number;
    i0: number;
    alpha: number;
  };
}

export interface ScenarioDoc {
  scenario_id: string;
  bbox: { min_lat: number; min_lon: number; max_lat: number; max_lon: number };
  cell_size_m: number;
  alpha: number;
  sources: SourceRow[];
  protected_areas: Record<string, [number, number][]>;
}

export interface ScenarioEnvelope {
  revision: number;
  scenario: ScenarioDoc;
}

export interface ScenarioListing {
  scenario_id: string;
  revision: number;
}

export interface ProbeValue {
  intensity: number;
  sqm: number;
  normalized: number;
}

export interface FootprintRow {
  source_id: string;
  footprint: number;
}

export interface FootprintResponse {
  area: string;
  area_total: number;
  cell_size_m: number;
  kernel: string;
  per_source: FootprintRow[];
}

export interface HotspotRegion {
  cell_count: number;
  centroid: [number, number];
  cells: [number, number][];
}

export interface HotspotsResponse {
  threshold: number;
  regions: HotspotRegion[];
}

export type JobStatus = "queued" | "running" | "done" | "failed";

export interface SourceChange {
  source_id: string;
  before: { lat: number; lon: number; c1: number; c2: number };
  after: { lat: number; lon: number; c1: number; c2: number };
}

export interface OptimizeResult {
  mode: string;
  converged: boolean;
  iterations: number;
  objective_before: number;
  objective_after: number;
  residuals: Record<string, Record<string, number>>;
  sources: SourceChange[];
  trace: { iteration: number; objective: number; max_residual: number; merit: number }[];
  scenario_after_sources: SourceRow[];
}

export interface Job {
  job_id: string;
  scenario_id: string;
  revision: number;
  mode: string;
  status: JobStatus;
  result: OptimizeResult | null;
  error: string | null;
}

/** Body for POST /scenarios/{id}/optimize. */
export interface OptimizeRequest {
  mode: "placement" | "tune_c1" | "tune_c2" | "joint";
  target: { area: string } | { polygon: [number, number][] } | { points: [number, number][] };
  slack_r_m?: number;
  omega?: number;
  max_iters?: number;
  tolerance?: number;
}
