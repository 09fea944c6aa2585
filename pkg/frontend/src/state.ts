/** UI state store: a single mutable snapshot plus change notifications. */

import type { Job, SourceRow } from "./types.js";

export type Tool = "place" | "drag" | "draw-polygon" | "inspect";

export interface InspectPanel {
  lat: number;
  lon: number;
  intensity: number;
  sqm: number;
  normalized: number;
  /** css color sampled from the overlay tile at the inspected point */
  swatch: string | null;
  /** true when the last refresh failed and the numbers may be outdated */
  stale: boolean;
}

export interface UiState {
  scenarioId: string | null;
  /** last revision acknowledged by the server */
  revision: number;
  tool: Tool;
  /** profile applied by the place tool */
  profileId: number;
  interpMethod: string;
  overlayOpacity: number;
  sources: SourceRow[];
  areas: Record<string, [number, number][]>;
  /** ring being drawn, [lat, lon] vertices */
  draft: [number, number][];
  pendingJobs: string[];
  lastJob: Job | null;
  inspect: InspectPanel | null;
  /** non-null shows the conflict banner */
  conflict: string | null;
  /** non-null shows the generic error banner */
  error: string | null;
}

export const initialState = (): UiState => ({
  scenarioId: null,
  revision: 0,
  tool: "inspect",
  profileId: 3,
  interpMethod: "idw",
  overlayOpacity: 0.85,
  sources: [],
  areas: {},
  draft: [],
  pendingJobs: [],
  lastJob: null,
  inspect: null,
  conflict: null,
  error: null,
});

export type Listener = (state: UiState) => void;

export class UiStore {
  private current: UiState = initialState();
  private readonly listeners = new Set<Listener>();

  get state(): UiState {
    return this.current;
  }

  update(patch: Partial<UiState>): void {
    this.current = { ...this.current, ...patch };
    for (const fn of this.listeners) fn(this.current);
  }

  subscribe(fn: Listener): () => void {
    this.listeners.add(fn);
    return () => this.listeners.delete(fn);
  }
}
