/**
 * Full flow against a live server: spawn `python3 -m rsrmv.cli serve`,
 * submit through the real controller, poll to completion, and render.
 * Also checks that the server hands out the built dashboard itself.
 */

import { spawn, type ChildProcess } from "node:child_process";
import { existsSync } from "node:fs";
import path from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { ApiClient, ApiError, type FetchLike } from "../src/api.js";
import { App } from "../src/app.js";
import { bestKTableHtml, runResultHtml } from "../src/views.js";

const here = path.dirname(fileURLToPath(import.meta.url));
const repoRoot = path.resolve(here, "..", "..");
const PORT = 21000 + (process.pid % 4000);
const BASE = `http://127.0.0.1:${PORT}`;

let server: ChildProcess;
let serverLog = "";

let fetchCount = 0;
const countingFetch: FetchLike = (url, init) => {
  fetchCount++;
  return fetch(url, init);
};

const api = new ApiClient(BASE, countingFetch);
const app = new App(api);

beforeAll(async () => {
  server = spawn("python3", ["-m", "rsrmv.cli", "serve", "--port", String(PORT)],
                 { cwd: repoRoot, stdio: ["ignore", "pipe", "pipe"] });
  server.stderr!.on("data", (d) => { serverLog += String(d); });
  server.stdout!.on("data", (d) => { serverLog += String(d); });

  const deadline = Date.now() + 90_000;
  for (;;) {
    try {
      const info = await api.getSysInfo();
      expect(info.cpu.length).toBeGreaterThan(0);
      break;
    } catch {
      if (Date.now() > deadline) {
        throw new Error(`server never came up on ${BASE}\n${serverLog}`);
      }
      await new Promise((r) => setTimeout(r, 200));
    }
  }
});

afterAll(() => {
  server?.kill();
});

describe("live serve instance", () => {
  it("rejects k=20 ternary client-side, without touching the server", async () => {
    const before = fetchCount;
    const id = await app.submitSweep({
      m: "32", n: "64", bitwidth: "ternary", kRange: "20", reps: "2", threads: "1",
    });
    expect(id).toBeNull();
    expect(fetchCount).toBe(before);
    expect(app.state.formErrors[0].message).toContain("cap of 10");
  });

  it("submit, poll, render: the full sweep round trip", async () => {
    const id = await app.submitSweep({
      m: "48", n: "96", bitwidth: "ternary", kRange: "1..3", reps: "3", threads: "1",
    });
    expect(id).not.toBeNull();

    const detail = await app.pollRun(id as number);
    expect(detail).not.toBeNull();
    expect(detail!.status).toBe("done");
    const report = detail!.report!;
    expect(report.rows.filter((r) => r.kind === "rsr").map((r) => r.k))
      .toEqual([1, 2, 3]);
    expect(report.rows.map((r) => r.kind))
      .toEqual(["rsr", "rsr", "rsr", "naive_f32", "naive_i8"]);
    expect(report.best_k).not.toBeNull();

    // rendered values are exactly the report fields
    const html = runResultHtml(detail!, new Set());
    expect(html).toContain('data-chart="line"');
    expect(html).toContain('data-chart="bars"');
    for (const row of report.rows) {
      expect(html).toContain(`data-ns="${row.ns_median}"`);
    }
    const best = report.rows.find((r) => r.kind === "rsr" && r.k === report.best_k)!;
    expect(html).toContain(`data-label="RSR k=${report.best_k}" data-ns="${best.ns_median}"`);
  });

  it("the best-k table reflects the server cache after the run", async () => {
    await app.refreshBestK();
    const entry = app.state.bestk.find((e) => e.m === 48 && e.n === 96);
    expect(entry).toBeDefined();
    expect(entry!.bitwidth).toBe("ternary");

    const direct = await api.getBestK(48, 96, "ternary");
    expect(direct).toEqual(entry);

    const html = bestKTableHtml(app.state.bestk);
    expect(html).toContain(`data-bestk="${entry!.best_k}"`);
    expect(html).toContain(`data-ns="${entry!.ns_median}"`);
  });

  it("server 4xx text survives to the banner verbatim", async () => {
    // bypass client validation to see the server's own wording
    const res = await fetch(`${BASE}/api/bench`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ m: 4, n: 8, bitwidth: "ternary", k_list: [12] }),
    });
    expect(res.status).toBe(400);
    const body = await res.json();
    expect(body.error).toBe("KTooLarge");

    try {
      await api.submitBench({ m: 4, n: 8, bitwidth: "ternary",
                              k_list: [12], reps: 1 });
      expect.unreachable("server accepted an oversized k");
    } catch (err) {
      expect(err).toBeInstanceOf(ApiError);
      expect((err as ApiError).display()).toBe(`${body.error}: ${body.message}`);
    }
  });

  it("serves the built dashboard from /", async () => {
    expect(existsSync(path.join(here, "..", "dist", "index.html"))).toBe(true);
    const res = await fetch(`${BASE}/`);
    expect(res.status).toBe(200);
    const html = await res.text();
    expect(html).toContain("rsrmv bench dashboard");

    const js = await fetch(`${BASE}/assets/main.js`);
    expect(js.status).toBe(200);
    expect(js.headers.get("content-type")).toContain("javascript");
  });
});
