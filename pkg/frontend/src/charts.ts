/**
 * SVG chart rendering.
 *
 * Charts are built as plain SVG strings from report rows. Every number
 * that appears -- point labels, bar labels, whisker ends -- is a field
 * read straight off a server report; the only arithmetic is mapping
 * values onto pixels and choosing axis ticks. Raw field values are
 * carried on data-ns/data-k attributes so tests can check them without
 * parsing the human-formatted labels.
 */

import type { BenchReport } from "./types.js";
import { escapeHtml, formatNs, KIND_LABEL } from "./format.js";

export interface SeriesPoint {
  k: number;
  ns: number;
  p10: number;
  p90: number;
}

export interface Series {
  label: string;
  points: SeriesPoint[];
}

export interface BaselineLine {
  label: string;
  ns: number;
}

export interface Bar {
  label: string;
  ns: number;
  accent: boolean;
}

const PALETTE = ["#58a6ff", "#3fb950", "#d29922", "#bc8cff", "#f0883e", "#39c5cf"];
const BASELINE_PALETTE = ["#da3633", "#8b949e"];

const W = 640;
const H = 320;
const MARGIN = { top: 28, right: 24, bottom: 40, left: 72 };

// ============================================================================
// Report adapters: pull chartable values out of a report, verbatim
// ============================================================================

/** The per-k RSR latency series of one report. */
export function reportToSeries(report: BenchReport, label: string): Series {
  const points = report.rows
    .filter((r) => r.kind === "rsr" && r.k !== null)
    .map((r) => ({ k: r.k as number, ns: r.ns_median, p10: r.ns_p10, p90: r.ns_p90 }))
    .sort((a, b) => a.k - b.k);
  return { label, points };
}

/** Baseline rows (k = null kinds) as horizontal reference lines. */
export function reportBaselines(report: BenchReport): BaselineLine[] {
  return report.rows
    .filter((r) => r.kind !== "rsr")
    .map((r) => ({ label: KIND_LABEL[r.kind] ?? r.kind, ns: r.ns_median }));
}

/**
 * Bars for the best-k comparison: the RSR row at the report's best_k
 * next to each baseline row.
 */
export function reportBestKBars(report: BenchReport): Bar[] {
  const bars: Bar[] = [];
  if (report.best_k !== null) {
    const best = report.rows.find((r) => r.kind === "rsr" && r.k === report.best_k);
    if (best) bars.push({ label: `RSR k=${best.k}`, ns: best.ns_median, accent: true });
  }
  for (const b of reportBaselines(report)) {
    bars.push({ label: b.label, ns: b.ns, accent: false });
  }
  return bars;
}

// ============================================================================
// Scales and axes
// ============================================================================

function yTicks(max: number): number[] {
  // round the step to 1/2/5 * 10^e so tick labels stay readable
  const rawStep = max / 4;
  const mag = Math.pow(10, Math.floor(Math.log10(Math.max(rawStep, 1))));
  const norm = rawStep / mag;
  const step = (norm <= 1 ? 1 : norm <= 2 ? 2 : norm <= 5 ? 5 : 10) * mag;
  const ticks: number[] = [];
  for (let v = 0; v <= max + step * 0.01; v += step) ticks.push(v);
  return ticks;
}

function axisFrame(maxNs: number, plotW: number, plotH: number): string {
  const parts: string[] = [];
  for (const t of yTicks(maxNs)) {
    const y = MARGIN.top + plotH - (t / maxNs) * plotH;
    parts.push(`<line x1="${MARGIN.left}" y1="${y.toFixed(1)}" x2="${MARGIN.left + plotW}" y2="${y.toFixed(1)}" stroke="#21262d" stroke-width="1"/>`);
    parts.push(`<text x="${MARGIN.left - 8}" y="${(y + 3).toFixed(1)}" text-anchor="end" class="tick">${formatNs(t)}</text>`);
  }
  parts.push(`<line x1="${MARGIN.left}" y1="${MARGIN.top}" x2="${MARGIN.left}" y2="${MARGIN.top + plotH}" stroke="#30363d"/>`);
  parts.push(`<line x1="${MARGIN.left}" y1="${MARGIN.top + plotH}" x2="${MARGIN.left + plotW}" y2="${MARGIN.top + plotH}" stroke="#30363d"/>`);
  return parts.join("");
}

function svgOpen(title: string, cls: string): string {
  return `<svg class="chart ${cls}" viewBox="0 0 ${W} ${H}" role="img" aria-label="${escapeHtml(title)}">`
    + `<text x="${MARGIN.left}" y="16" class="chart-title">${escapeHtml(title)}</text>`;
}

function emptyChart(title: string, cls: string): string {
  return svgOpen(title, cls)
    + `<text x="${W / 2}" y="${H / 2}" text-anchor="middle" class="empty-note">no completed measurements</text></svg>`;
}

// ============================================================================
// Latency vs k (line chart; also used for run overlays)
// ============================================================================

export function latencyLineChart(series: Series[], baselines: BaselineLine[],
                                 title = "Latency vs k"): string {
  const drawn = series.filter((s) => s.points.length > 0);
  if (drawn.length === 0) return emptyChart(title, "line-chart");

  const plotW = W - MARGIN.left - MARGIN.right;
  const plotH = H - MARGIN.top - MARGIN.bottom;

  const allK = drawn.flatMap((s) => s.points.map((p) => p.k));
  const kMin = Math.min(...allK);
  const kMax = Math.max(...allK);
  const highs = drawn.flatMap((s) => s.points.map((p) => Math.max(p.ns, p.p90)))
    .concat(baselines.map((b) => b.ns));
  const maxNs = Math.max(...highs, 1) * 1.08;

  const x = (k: number) =>
    kMax === kMin ? MARGIN.left + plotW / 2
                  : MARGIN.left + ((k - kMin) / (kMax - kMin)) * plotW;
  const y = (ns: number) => MARGIN.top + plotH - (ns / maxNs) * plotH;

  const parts: string[] = [svgOpen(title, "line-chart"), axisFrame(maxNs, plotW, plotH)];

  // x ticks at every integer k present in any series
  for (const k of [...new Set(allK)].sort((a, b) => a - b)) {
    parts.push(`<text x="${x(k).toFixed(1)}" y="${MARGIN.top + plotH + 18}" text-anchor="middle" class="tick">k=${k}</text>`);
  }

  baselines.forEach((b, i) => {
    const color = BASELINE_PALETTE[i % BASELINE_PALETTE.length];
    const by = y(b.ns);
    parts.push(`<line class="baseline" data-label="${escapeHtml(b.label)}" data-ns="${b.ns}" x1="${MARGIN.left}" y1="${by.toFixed(1)}" x2="${MARGIN.left + plotW}" y2="${by.toFixed(1)}" stroke="${color}" stroke-dasharray="6 4" stroke-width="1.5"/>`);
    parts.push(`<text x="${MARGIN.left + plotW - 4}" y="${(by - 5).toFixed(1)}" text-anchor="end" class="baseline-label" fill="${color}">${escapeHtml(b.label)} ${formatNs(b.ns)}</text>`);
  });

  drawn.forEach((s, si) => {
    const color = PALETTE[si % PALETTE.length];
    const pts = [...s.points].sort((a, b) => a.k - b.k);
    const path = pts.map((p, i) => `${i === 0 ? "M" : "L"}${x(p.k).toFixed(1)},${y(p.ns).toFixed(1)}`).join(" ");
    parts.push(`<path class="series" data-label="${escapeHtml(s.label)}" d="${path}" fill="none" stroke="${color}" stroke-width="2"/>`);
    for (const p of pts) {
      const px = x(p.k);
      // p10..p90 whisker behind the marker
      parts.push(`<line x1="${px.toFixed(1)}" y1="${y(p.p10).toFixed(1)}" x2="${px.toFixed(1)}" y2="${y(p.p90).toFixed(1)}" stroke="${color}" stroke-width="1" opacity="0.5" data-p10="${p.p10}" data-p90="${p.p90}"/>`);
      parts.push(`<circle class="pt" data-series="${escapeHtml(s.label)}" data-k="${p.k}" data-ns="${p.ns}" cx="${px.toFixed(1)}" cy="${y(p.ns).toFixed(1)}" r="3.5" fill="${color}"><title>${escapeHtml(s.label)} k=${p.k}: ${formatNs(p.ns)}</title></circle>`);
      parts.push(`<text x="${px.toFixed(1)}" y="${(y(p.ns) - 8).toFixed(1)}" text-anchor="middle" class="pt-label" fill="${color}">${formatNs(p.ns)}</text>`);
    }
    if (drawn.length > 1) {
      parts.push(`<text x="${MARGIN.left + 8}" y="${MARGIN.top + 14 + si * 16}" class="legend" fill="${color}">&#9632; ${escapeHtml(s.label)}</text>`);
    }
  });

  parts.push("</svg>");
  return parts.join("");
}

// ============================================================================
// Best-k bar chart (RSR at best k vs baselines)
// ============================================================================

export function bestKBarChart(bars: Bar[], title = "Best k vs baselines"): string {
  if (bars.length === 0) return emptyChart(title, "bar-chart");

  const plotW = W - MARGIN.left - MARGIN.right;
  const plotH = H - MARGIN.top - MARGIN.bottom;
  const maxNs = Math.max(...bars.map((b) => b.ns), 1) * 1.12;
  const slot = plotW / bars.length;
  const barW = Math.min(slot * 0.55, 90);

  const parts: string[] = [svgOpen(title, "bar-chart"), axisFrame(maxNs, plotW, plotH)];

  bars.forEach((b, i) => {
    const cx = MARGIN.left + slot * (i + 0.5);
    const h = (b.ns / maxNs) * plotH;
    const top = MARGIN.top + plotH - h;
    const color = b.accent ? "#58a6ff" : "#6e7681";
    parts.push(`<rect class="bar" data-label="${escapeHtml(b.label)}" data-ns="${b.ns}" x="${(cx - barW / 2).toFixed(1)}" y="${top.toFixed(1)}" width="${barW.toFixed(1)}" height="${h.toFixed(1)}" fill="${color}" rx="2"><title>${escapeHtml(b.label)}: ${formatNs(b.ns)}</title></rect>`);
    parts.push(`<text x="${cx.toFixed(1)}" y="${(top - 6).toFixed(1)}" text-anchor="middle" class="bar-value">${formatNs(b.ns)}</text>`);
    parts.push(`<text x="${cx.toFixed(1)}" y="${MARGIN.top + plotH + 18}" text-anchor="middle" class="tick">${escapeHtml(b.label)}</text>`);
  });

  parts.push("</svg>");
  return parts.join("");
}
