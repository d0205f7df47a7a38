/**
 * Controller behavior against a scripted API: validation gating,
 * verbatim 4xx surfacing, offline fallback, and the polling loop.
 */

import { beforeEach, describe, expect, it } from "vitest";
import { ApiClient } from "../src/api.js";
import { App } from "../src/app.js";
import type { BenchReport } from "../src/types.js";
import type { SweepForm } from "../src/validate.js";
import fixtureJson from "./fixtures/report_256x1024_ternary.json";

const fixture = fixtureJson as BenchReport;

const form: SweepForm = {
  m: "256", n: "1024", bitwidth: "ternary", kRange: "2,4,6,8",
  reps: "10", threads: "1",
};

type Handler = (url: string, init?: RequestInit) => { status: number; body: unknown };

let calls: { url: string; method: string }[];

function makeApp(handler: Handler, sleep?: (ms: number) => Promise<void>): App {
  calls = [];
  const api = new ApiClient("", async (url, init) => {
    calls.push({ url, method: init?.method ?? "GET" });
    const { status, body } = handler(url, init);
    return new Response(JSON.stringify(body), {
      status, headers: { "Content-Type": "application/json" },
    });
  });
  return new App(api, () => {}, sleep ?? (async () => {}));
}

const runsRoute = (status: string) => ({
  "/api/runs": { status: 200, body: [{ id: 1, status, timestamp: 0, config: {} }] },
  "/api/bestk": { status: 200, body: [] },
});

beforeEach(() => { calls = []; });

describe("submitSweep", () => {
  it("an invalid form never reaches the network", async () => {
    const app = makeApp(() => ({ status: 500, body: null }));
    const id = await app.submitSweep({ ...form, kRange: "20" });
    expect(id).toBeNull();
    expect(calls).toHaveLength(0);
    expect(app.state.formErrors[0].message).toContain("cap of 10");
  });

  it("posts a valid form and records the run id", async () => {
    const app = makeApp((url, init) => {
      if (url === "/api/bench") {
        expect(JSON.parse(String(init?.body))).toEqual({
          m: 256, n: 1024, bitwidth: "ternary", k_list: [2, 4, 6, 8],
          reps: 10, threads: 1,
        });
        return { status: 202, body: { id: 5 } };
      }
      return { status: 200, body: [] };
    });
    const id = await app.submitSweep(form);
    expect(id).toBe(5);
    expect(app.state.selectedId).toBe(5);
    expect(calls[0]).toEqual({ url: "/api/bench", method: "POST" });
  });

  it("shows a server rejection word for word", async () => {
    const app = makeApp(() => ({
      status: 400,
      body: { error: "KTooLarge", message: "k=12 exceeds the ternary cap of 10" },
    }));
    // the form passes the client-side caps; the stubbed server rejects
    // anyway, and the banner must repeat its words exactly
    const id = await app.submitSweep(form);
    expect(id).toBeNull();
    expect(app.state.banner).toBe("KTooLarge: k=12 exceeds the ternary cap of 10");
  });

  it("queue-full (409) is surfaced like any other server message", async () => {
    const app = makeApp(() => ({
      status: 409,
      body: { error: "QueueFull", message: "job queue is at its bound of 32" },
    }));
    await app.submitSweep(form);
    expect(app.state.banner).toBe("QueueFull: job queue is at its bound of 32");
  });
});

describe("offline behavior", () => {
  it("a dead server flips the offline flag and keeps cached runs", async () => {
    let dead = false;
    const app = makeApp((url) => {
      if (dead) throw new TypeError("fetch failed");
      return (runsRoute("done") as Record<string, { status: number; body: unknown }>)[url]
        ?? { status: 404, body: {} };
    });
    await app.refreshRuns();
    expect(app.state.online).toBe(true);
    expect(app.state.runs).toHaveLength(1);

    dead = true;
    await app.refreshRuns();
    expect(app.state.online).toBe(false);
    expect(app.state.runs).toHaveLength(1); // cache untouched

    dead = false;
    await app.refreshRuns();
    expect(app.state.online).toBe(true);
  });
});

describe("pollRun", () => {
  it("polls until done, then refreshes the run list and best-k", async () => {
    const states = ["queued", "running", "running", "done"];
    let i = 0;
    let sleeps = 0;
    const app = makeApp((url) => {
      if (url === "/api/runs/1") {
        const status = states[Math.min(i++, states.length - 1)];
        const body: Record<string, unknown> = {
          id: 1, status, timestamp: 0, config: { m: 256, n: 1024, bitwidth: "ternary" },
        };
        if (status === "done") body.report = fixture;
        return { status: 200, body };
      }
      if (url === "/api/runs") return { status: 200, body: [] };
      if (url === "/api/bestk") {
        return { status: 200, body: [{ m: 256, n: 1024, bitwidth: "ternary",
                                       best_k: 2, ns_median: 48739.0, run_id: 1 }] };
      }
      return { status: 404, body: {} };
    }, async () => { sleeps++; });

    const detail = await app.pollRun(1);
    expect(detail?.status).toBe("done");
    expect(detail?.report?.best_k).toBe(2);
    expect(sleeps).toBe(3); // one wait per non-terminal poll
    expect(app.state.bestk).toHaveLength(1);
    expect(app.state.details.get(1)?.report).toEqual(fixture);
  });

  it("a run that errors terminates the loop with the error detail", async () => {
    const app = makeApp((url) => {
      if (url === "/api/runs/2") {
        return { status: 200, body: { id: 2, status: "error", timestamp: 0,
          config: {}, error: { error: "RuntimeError", message: "synthetic fault" } } };
      }
      return { status: 200, body: [] };
    });
    const detail = await app.pollRun(2);
    expect(detail?.status).toBe("error");
    expect(detail?.error?.message).toBe("synthetic fault");
  });

  it("a server that vanishes mid-poll resolves null and goes offline", async () => {
    const app = makeApp(() => { throw new TypeError("fetch failed"); });
    const detail = await app.pollRun(9);
    expect(detail).toBeNull();
    expect(app.state.online).toBe(false);
  });
});

describe("compare selection", () => {
  it("keeps selection ordered by run id and only returns fetched details", () => {
    const app = makeApp(() => ({ status: 200, body: [] }));
    app.state.details.set(3, { id: 3, status: "done", timestamp: 0,
      config: { m: 1, n: 1, bitwidth: "binary", k_list: [1], reps: 1 }, report: fixture });
    app.toggleCompare(7);
    app.toggleCompare(3);
    expect([...app.state.compareIds].sort()).toEqual([3, 7]);
    expect(app.compareSelection().map((d) => d.id)).toEqual([3]);
    app.toggleCompare(7);
    expect(app.state.compareIds).toEqual(new Set([3]));
  });
});
