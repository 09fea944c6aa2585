/** Orchestrates the editing flows against the service.
 *
 * Every mutation is optimistic: the local state changes first, the server
 * is asked second, and a revision conflict (409) reverts the local change,
 * surfaces the conflict banner, and reloads the authoritative state. All
 * displayed numbers come from service responses, never client math.
 */

import { ApiClient, ApiError } from "./api.js";
import { JobPoller, type PollerOptions } from "./jobs.js";
import { pixelInTile } from "./mercator.js";
import { canAppendVertex, ringIsSimple, type Pt } from "./polygon.js";
import type { UiStore } from "./state.js";
import { TileCache, cssColor, samplePixel } from "./tiles.js";
import type { FootprintResponse, Job, OptimizeRequest, SourceRow } from "./types.js";

export interface FootprintTable {
  area: string;
  kernel: string;
  rows: { source_id: string; footprint: number }[];
  /** server-reported total; equals the row sum by construction */
  total: number;
}

export class AppController {
  constructor(
    readonly api: ApiClient,
    readonly store: UiStore,
    readonly tiles: TileCache,
    private readonly pollerOptions: PollerOptions = {},
  ) {}

  /** Load a scenario and make it the active one. */
  async loadScenario(id: string): Promise<void> {
    const env = await this.api.getScenario(id);
    this.store.update({
      scenarioId: id,
      revision: env.revision,
      sources: env.scenario.sources,
      areas: env.scenario.protected_areas,
      conflict: null,
      error: null,
    });
  }

  /** Re-fetch the active scenario (after edits or conflicts). */
  async refresh(): Promise<void> {
    const id = this.requireScenario();
    const env = await this.api.getScenario(id);
    if (env.revision !== this.store.state.revision) {
      this.tiles.invalidateScenario(id);
    }
    this.store.update({
      revision: env.revision,
      sources: env.scenario.sources,
      areas: env.scenario.protected_areas,
    });
  }

  /** Add a lamp with the currently selected profile at a map position. */
  async placeSource(lat: number, lon: number): Promise<void> {
    const row: SourceRow = {
      id: this.nextSourceId(),
      lat,
      lon,
      profile_id: this.store.state.profileId,
    };
    await this.commitSources([...this.store.state.sources, row]);
  }

  /** Move an existing lamp. */
  async moveSource(id: string, lat: number, lon: number): Promise<void> {
    const next = this.store.state.sources.map((s) =>
      s.id === id ? { ...s, lat, lon } : s,
    );
    await this.commitSources(next);
  }

  /** Remove a lamp. Removing the last one leaves a dark overlay. */
  async removeSource(id: string): Promise<void> {
    await this.commitSources(this.store.state.sources.filter((s) => s.id !== id));
  }

  /**
   * Replace the source set via compare-and-swap. On a revision conflict the
   * optimistic edit is rolled back, the banner is raised, and the current
   * server state is reloaded.
   */
  private async commitSources(next: SourceRow[]): Promise<void> {
    const id = this.requireScenario();
    const prev = this.store.state.sources;
    const revision = this.store.state.revision;
    this.store.update({ sources: next, conflict: null, error: null });
    try {
      await this.api.putSources(id, revision, next);
      // pull back the server-normalized rows (profile params filled in)
      await this.refresh();
    } catch (err) {
      this.store.update({ sources: prev });
      if (err instanceof ApiError && err.status === 409) {
        this.store.update({
          conflict: "someone else changed this scenario; your edit was not saved",
        });
        await this.refresh();
        return;
      }
      this.store.update({ error: err instanceof Error ? err.message : String(err) });
      throw err;
    }
  }

  /** Probe the field at a point and sample the overlay swatch there. */
  async inspect(lat: number, lon: number, zoom: number): Promise<void> {
    const id = this.requireScenario();
    const previous = this.store.state.inspect;
    try {
      const probe = await this.api.probeValue(id, lat, lon);
      let swatch: string | null = null;
      try {
        const { tile, px, py } = pixelInTile(lat, lon, Math.round(zoom));
        const parts = { scenarioId: id, revision: this.store.state.revision, ...tile };
        const url = this.api.tileUrl(id, tile.z, tile.x, tile.y, parts.revision);
        const bitmap = await this.tiles.get(parts, url);
        swatch = cssColor(samplePixel(bitmap, px, py));
      } catch {
        swatch = null; // numbers still valid without a swatch
      }
      this.store.update({
        inspect: { lat, lon, ...probe, swatch, stale: false },
      });
    } catch {
      // network trouble: keep the previous numbers, flag them stale
      this.store.update({
        inspect: previous ? { ...previous, stale: true } : null,
      });
    }
  }

  /** Try to extend the draft ring; returns false when it would self-cross. */
  addDraftVertex(lat: number, lon: number): boolean {
    const draft = this.store.state.draft;
    const pt: Pt = [lat, lon];
    if (!canAppendVertex(draft, pt)) return false;
    this.store.update({ draft: [...draft, pt] });
    return true;
  }

  /**
   * Close the draft ring and keep it as a named client-side area, usable as
   * a what-if optimization target. Returns false for rings that are not
   * simple polygons.
   */
  finishDraft(name: string): boolean {
    const draft = this.store.state.draft;
    if (draft.length < 3 || !ringIsSimple(draft)) return false;
    this.store.update({
      areas: { ...this.store.state.areas, [name]: draft },
      draft: [],
    });
    return true;
  }

  cancelDraft(): void {
    this.store.update({ draft: [] });
  }

  /** Run a what-if optimization and watch it to completion. */
  async runWhatIf(spec: OptimizeRequest, onUpdate?: (job: Job) => void): Promise<Job> {
    const id = this.requireScenario();
    const poller = new JobPoller(this.api, this.pollerOptions);
    this.activePoller = poller;
    const job = await poller.run(id, spec, (j) => {
      this.store.update({
        pendingJobs: j.status === "done" || j.status === "failed" ? [] : [j.job_id],
        lastJob: j,
      });
      onUpdate?.(j);
    });
    this.store.update({ pendingJobs: [], lastJob: job });
    if (job.status === "failed" && job.error) {
      this.store.update({ error: job.error });
    }
    return job;
  }

  /** Detach from the running job; it continues server-side. */
  cancelWhatIf(): void {
    this.activePoller?.cancel();
    this.store.update({ pendingJobs: [] });
  }

  /** Per-source parameter changes from the last completed what-if. */
  whatIfRows(): { source_id: string; before: Record<string, number>; after: Record<string, number> }[] {
    const job = this.store.state.lastJob;
    if (!job || job.status !== "done" || !job.result) return [];
    return job.result.sources;
  }

  /** Apply the last what-if outcome to the scenario via CAS at the job's base revision. */
  async applyWhatIf(): Promise<void> {
    const job = this.store.state.lastJob;
    if (!job || job.status !== "done" || !job.result) {
      throw new Error("no completed what-if to apply");
    }
    const id = this.requireScenario();
    const prev = this.store.state.sources;
    try {
      await this.api.putSources(id, job.revision, job.result.scenario_after_sources);
      await this.refresh();
    } catch (err) {
      this.store.update({ sources: prev });
      if (err instanceof ApiError && err.status === 409) {
        this.store.update({
          conflict: "scenario changed since the what-if ran; re-run it on the new revision",
        });
        await this.refresh();
        return;
      }
      throw err;
    }
  }

  /** Footprint ledger straight from the service. */
  async footprintTable(
    area: string,
    opts: { kernel?: string; cellSizeM?: number; mountHeightM?: number } = {},
  ): Promise<FootprintTable> {
    const id = this.requireScenario();
    const resp: FootprintResponse = await this.api.footprint(id, area, opts);
    return {
      area: resp.area,
      kernel: resp.kernel,
      rows: resp.per_source,
      total: resp.area_total,
    };
  }

  private activePoller: JobPoller | null = null;

  private requireScenario(): string {
    const id = this.store.state.scenarioId;
    if (!id) throw new Error("no scenario loaded");
    return id;
  }

  private nextSourceId(): string {
    const taken = new Set(this.store.state.sources.map((s) => s.id));
    let n = taken.size + 1;
    while (taken.has(`ui-${n}`)) n++;
    return `ui-${n}`;
  }
}
