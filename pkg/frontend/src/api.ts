/**
 * Thin fetch client for the bench API.
 *
 * Every non-2xx response is raised as ApiError with the server's
 * {error, message} body intact so views can surface it verbatim.
 * A network-level failure (server gone) raises OfflineError instead,
 * which the app treats as "show cached runs, read-only".
 */

import type {
  BenchConfigBody,
  BestKEntry,
  Bitwidth,
  RunDetail,
  RunSummary,
  SysInfo,
} from "./types.js";

export class ApiError extends Error {
  status: number;
  kind: string;

  constructor(status: number, kind: string, message: string) {
    super(message);
    this.status = status;
    this.kind = kind;
  }

  /** Exactly what the UI shows: the server's own words. */
  display(): string {
    return `${this.kind}: ${this.message}`;
  }
}

export class OfflineError extends Error {
  constructor(cause: unknown) {
    super(`server unreachable: ${cause instanceof Error ? cause.message : cause}`);
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  base: string;
  private fetchFn: FetchLike;

  constructor(base = "", fetchFn: FetchLike = (u, i) => fetch(u, i)) {
    this.base = base.replace(/\/$/, "");
    this.fetchFn = fetchFn;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let res: Response;
    try {
      res = await this.fetchFn(this.base + path, init);
    } catch (err) {
      throw new OfflineError(err);
    }
    let body: unknown = null;
    try {
      body = await res.json();
    } catch {
      // non-JSON body; fall through to the generic error below
    }
    if (!res.ok) {
      const e = body as { error?: string; message?: string } | null;
      throw new ApiError(res.status, e?.error ?? `HTTP ${res.status}`,
                         e?.message ?? res.statusText);
    }
    return body as T;
  }

  submitBench(config: BenchConfigBody): Promise<{ id: number }> {
    return this.request("/api/bench", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(config),
    });
  }

  getRuns(): Promise<RunSummary[]> {
    return this.request("/api/runs");
  }

  getRun(id: number): Promise<RunDetail> {
    return this.request(`/api/runs/${id}`);
  }

  getBestKTable(): Promise<BestKEntry[]> {
    return this.request("/api/bestk");
  }

  getBestK(m: number, n: number, bitwidth: Bitwidth): Promise<BestKEntry> {
    return this.request(`/api/bestk?m=${m}&n=${n}&bitwidth=${bitwidth}`);
  }

  getSysInfo(): Promise<SysInfo> {
    return this.request("/api/sysinfo");
  }
}
