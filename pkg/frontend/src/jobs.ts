/** Optimization job submission and polling.
 *
 * Jobs run server-side; the poller only watches. Cancelling detaches the
 * watcher (the job keeps running on the server) and resolves with the last
 * snapshot seen.
 */

import type { ApiClient } from "./api.js";
import type { Job, OptimizeRequest } from "./types.js";

export interface PollerOptions {
  intervalMs?: number;
  /** injectable for tests; defaults to setTimeout */
  sleep?: (ms: number) => Promise<void>;
}

const defaultSleep = (ms: number) => new Promise<void>((r) => setTimeout(r, ms));

export class JobPoller {
  private readonly intervalMs: number;
  private readonly sleep: (ms: number) => Promise<void>;
  private cancelled = false;

  constructor(
    private readonly api: ApiClient,
    options: PollerOptions = {},
  ) {
    this.intervalMs = options.intervalMs ?? 400;
    this.sleep = options.sleep ?? defaultSleep;
  }

  /** Stop watching. The server-side job is unaffected. */
  cancel(): void {
    this.cancelled = true;
  }

  get isCancelled(): boolean {
    return this.cancelled;
  }

  /**
   * Submit a job and poll until it finishes, fails, or this poller is
   * cancelled. `onUpdate` fires after every snapshot.
   */
  async run(
    scenarioId: string,
    spec: OptimizeRequest,
    onUpdate?: (job: Job) => void,
  ): Promise<Job> {
    const { job_id } = await this.api.submitOptimize(scenarioId, spec);
    let job = await this.api.getJob(job_id);
    onUpdate?.(job);
    while (job.status === "queued" || job.status === "running") {
      if (this.cancelled) return job;
      await this.sleep(this.intervalMs);
      if (this.cancelled) return job;
      job = await this.api.getJob(job_id);
      onUpdate?.(job);
    }
    return job;
  }
}
