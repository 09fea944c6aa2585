import { describe, expect, it } from "vitest";

import type { ApiClient } from "../src/api.js";
import { JobPoller } from "../src/jobs.js";
import type { Job, JobStatus } from "../src/types.js";

const jobSnapshot = (status: JobStatus, extra: Partial<Job> = {}): Job => ({
  job_id: "j1",
  scenario_id: "lake",
  revision: 1,
  mode: "tune_c1",
  status,
  result: null,
  error: null,
  ...extra,
});

/** minimal ApiClient double driving a scripted job lifecycle */
const makeApi = (sequence: Job[]) => {
  let polls = 0;
  const api = {
    submitOptimize: async () => ({ job_id: "j1" }),
    getJob: async () => {
      const job = sequence[Math.min(polls, sequence.length - 1)]!;
      polls++;
      return job;
    },
  } as unknown as ApiClient;
  return { api, pollCount: () => polls };
};

const instantSleep = async () => {};

describe("JobPoller", () => {
  it("polls until the job is done", async () => {
    const { api, pollCount } = makeApi([
      jobSnapshot("queued"),
      jobSnapshot("running"),
      jobSnapshot("done"),
    ]);
    const seen: JobStatus[] = [];
    const poller = new JobPoller(api, { sleep: instantSleep });
    const job = await poller.run("lake", { mode: "tune_c1", target: { area: "lake" } }, (j) =>
      seen.push(j.status),
    );
    expect(job.status).toBe("done");
    expect(seen).toEqual(["queued", "running", "done"]);
    expect(pollCount()).toBe(3);
  });

  it("propagates a failed job with its error text intact", async () => {
    const { api } = makeApi([jobSnapshot("failed", { error: "no feasible point" })]);
    const poller = new JobPoller(api, { sleep: instantSleep });
    const job = await poller.run("lake", { mode: "tune_c1", target: { area: "lake" } });
    expect(job.status).toBe("failed");
    expect(job.error).toBe("no feasible point");
  });

  it("cancel detaches without further polling", async () => {
    const { api, pollCount } = makeApi([jobSnapshot("queued"), jobSnapshot("running")]);
    const poller = new JobPoller(api, {
      sleep: async () => {
        poller.cancel(); // cancelled while waiting between polls
      },
    });
    const job = await poller.run("lake", { mode: "tune_c1", target: { area: "lake" } });
    expect(job.status).toBe("queued");
    expect(pollCount()).toBe(1);
    expect(poller.isCancelled).toBe(true);
  });
});
