/**
 * Client-side form validation.
 *
 * Deliberately mirrors the caps the server enforces in its config
 * parser, so a bad form never produces a request: k <= 16 for binary,
 * k <= 10 for ternary, shapes within [1, 16384], reps within [1, 10000].
 */

import type { BenchConfigBody, Bitwidth } from "./types.js";

export const K_CAP: Record<Bitwidth, number> = { binary: 16, ternary: 10 };
export const MAX_DIM = 16384;
export const MAX_REPS = 10000;

export interface SweepForm {
  m: string;
  n: string;
  bitwidth: Bitwidth;
  kRange: string;
  reps: string;
  threads: string;
}

export interface FieldError {
  field: keyof SweepForm;
  message: string;
}

/**
 * Parse a k-range entry: either "lo..hi" or a comma list like "2,4,8".
 * Returns null when the text is not parseable at all.
 */
export function parseKRange(text: string): number[] | null {
  const t = text.trim();
  if (!t) return null;
  const span = t.match(/^(\d+)\s*\.\.\s*(\d+)$/);
  if (span) {
    const lo = parseInt(span[1], 10);
    const hi = parseInt(span[2], 10);
    if (hi < lo) return null;
    const ks: number[] = [];
    for (let k = lo; k <= hi; k++) ks.push(k);
    return ks;
  }
  const parts = t.split(",").map((p) => p.trim());
  if (parts.some((p) => !/^\d+$/.test(p))) return null;
  return parts.map((p) => parseInt(p, 10));
}

function intField(value: string, field: keyof SweepForm, label: string,
                  lo: number, hi: number, errors: FieldError[]): number {
  const v = value.trim();
  if (!/^-?\d+$/.test(v)) {
    errors.push({ field, message: `${label} must be an integer` });
    return NaN;
  }
  const num = parseInt(v, 10);
  if (num < lo || num > hi) {
    errors.push({ field, message: `${label} must lie in [${lo}, ${hi}]` });
    return NaN;
  }
  return num;
}

/**
 * Validate the sweep form. On success returns the request body to POST;
 * on failure returns the list of per-field errors and no body.
 */
export function validateForm(form: SweepForm):
    { body: BenchConfigBody | null; errors: FieldError[] } {
  const errors: FieldError[] = [];
  const m = intField(form.m, "m", "m", 1, MAX_DIM, errors);
  const n = intField(form.n, "n", "n", 1, MAX_DIM, errors);
  const reps = intField(form.reps, "reps", "reps", 1, MAX_REPS, errors);
  const threads = intField(form.threads, "threads", "threads", 1, 64, errors);

  if (form.bitwidth !== "binary" && form.bitwidth !== "ternary") {
    errors.push({ field: "bitwidth", message: "bitwidth must be binary or ternary" });
  }

  let kList: number[] | null = null;
  const cap = K_CAP[form.bitwidth];
  kList = parseKRange(form.kRange);
  if (kList === null) {
    errors.push({ field: "kRange",
                  message: 'k range must be "lo..hi" or a comma list like "2,4,8"' });
  } else if (cap !== undefined) {
    for (const k of kList) {
      if (k < 1) {
        errors.push({ field: "kRange", message: `k must be positive, got ${k}` });
        break;
      }
      if (k > cap) {
        errors.push({ field: "kRange",
                      message: `k=${k} exceeds the ${form.bitwidth} cap of ${cap}` });
        break;
      }
    }
  }

  if (errors.length > 0) return { body: null, errors };
  return {
    body: {
      m, n,
      bitwidth: form.bitwidth,
      k_list: kList as number[],
      reps,
      threads,
    },
    errors: [],
  };
}
