/**
 * Wire types for the bench API.
 *
 * These mirror the JSON the server emits verbatim. Nothing here is
 * computed client-side; the dashboard only displays what it is given.
 */

export type Bitwidth = "binary" | "ternary";

export type RunStatus = "queued" | "running" | "done" | "error";

/** One measured configuration: an RSR k point or a baseline. */
export interface BenchRow {
  kind: "rsr" | "naive_f32" | "naive_i8";
  m: number;
  n: number;
  bitwidth: Bitwidth;
  k: number | null;
  ns_median: number;
  ns_p10: number;
  ns_p90: number;
  gather_adds: number;
  scatter_adds: number;
  preprocess_ms: number;
  artifact_bytes: number;
  best_k: number | null;
  env: Record<string, unknown>;
}

export interface BenchReport {
  env: Record<string, unknown>;
  best_k: number | null;
  rows: BenchRow[];
  errors: { k: number; error: string }[];
}

/** POST /api/bench body. Field names match the server's parse_config. */
export interface BenchConfigBody {
  m: number;
  n: number;
  bitwidth: Bitwidth;
  k_list: number[];
  reps: number;
  warmup?: number;
  seed?: number;
  threads?: number;
  baselines?: string[];
}

/** GET /api/runs entry (no report attached). */
export interface RunSummary {
  id: number;
  status: RunStatus;
  timestamp: number;
  config: BenchConfigBody & Record<string, unknown>;
}

/** GET /api/runs/{id}: summary plus report or error once finished. */
export interface RunDetail extends RunSummary {
  report?: BenchReport;
  error?: { error: string; message: string };
}

/** GET /api/bestk entry. */
export interface BestKEntry {
  m: number;
  n: number;
  bitwidth: Bitwidth;
  best_k: number;
  ns_median: number | null;
  run_id: number;
}

export interface SysInfo {
  cpu: string;
  threads: number;
  version: string;
}

/** 4xx/5xx body: {"error": kind, "message": text}. Shown verbatim. */
export interface ApiErrorBody {
  error: string;
  message: string;
}
