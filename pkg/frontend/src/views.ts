/**
 * HTML fragments for the dashboard. Pure string builders: state in,
 * markup out. main.ts owns the DOM and event wiring.
 */

import type { BestKEntry, RunDetail, RunSummary } from "./types.js";
import {
  bestKBarChart,
  latencyLineChart,
  reportBaselines,
  reportBestKBars,
  reportToSeries,
} from "./charts.js";
import { escapeHtml, formatBytes, formatNs, formatTimestamp, KIND_LABEL } from "./format.js";

/** Server-provided error text, shown without rewording. */
export function errorBanner(text: string): string {
  return `<div class="banner error" role="alert">${escapeHtml(text)}</div>`;
}

export function offlineBanner(): string {
  return `<div class="banner offline" role="alert">`
    + `server unreachable &mdash; showing cached runs, read-only</div>`;
}

export function shapeLabel(run: RunSummary): string {
  const c = run.config;
  return `${c.m}×${c.n} ${c.bitwidth}`;
}

/**
 * A completed run is stale once a newer run for the same (m, n, bitwidth)
 * has been submitted: its charts no longer describe the latest request.
 */
export function staleRunIds(summaries: RunSummary[]): Set<number> {
  const stale = new Set<number>();
  for (const run of summaries) {
    for (const other of summaries) {
      if (other.id > run.id
          && other.config.m === run.config.m
          && other.config.n === run.config.n
          && other.config.bitwidth === run.config.bitwidth) {
        stale.add(run.id);
        break;
      }
    }
  }
  return stale;
}

function statusBadge(status: string): string {
  return `<span class="status ${escapeHtml(status)}">${escapeHtml(status)}</span>`;
}

/**
 * Sidebar run list. Completed runs get a compare checkbox; the charts of
 * whichever run is selected render in the main panel.
 */
export function runListHtml(summaries: RunSummary[], selectedId: number | null,
                            compareIds: Set<number>, stale: Set<number>): string {
  if (summaries.length === 0) {
    return `<p class="empty-note">no runs yet &mdash; submit a sweep</p>`;
  }
  const rows = [...summaries].sort((a, b) => b.id - a.id).map((run) => {
    const classes = ["run-item"];
    if (run.id === selectedId) classes.push("active");
    if (stale.has(run.id)) classes.push("stale");
    const check = run.status === "done"
      ? `<input type="checkbox" class="compare-box" data-id="${run.id}"`
        + `${compareIds.has(run.id) ? " checked" : ""} title="select for overlay">`
      : "";
    return `<div class="${classes.join(" ")}" data-id="${run.id}">`
      + `<div class="run-item-top"><span class="run-id">#${run.id}</span>`
      + `${statusBadge(run.status)}${check}</div>`
      + `<div class="run-meta">${escapeHtml(shapeLabel(run))}`
      + ` &middot; k [${run.config.k_list.join(", ")}]`
      + ` &middot; ${formatTimestamp(run.timestamp)}`
      + `${stale.has(run.id) ? ' &middot; <span class="stale-tag">stale</span>' : ""}`
      + `</div></div>`;
  });
  return rows.join("");
}

function reportTable(detail: RunDetail): string {
  const report = detail.report!;
  const head = `<tr><th>kind</th><th>k</th><th>median</th><th>p10</th><th>p90</th>`
    + `<th>gather adds</th><th>scatter adds</th><th>preprocess</th><th>artifact</th></tr>`;
  const body = report.rows.map((r) => {
    const kind = KIND_LABEL[r.kind] ?? r.kind;
    const best = r.kind === "rsr" && r.k === report.best_k ? " class=\"best-row\"" : "";
    return `<tr${best} data-kind="${r.kind}" data-k="${r.k ?? ""}">`
      + `<td>${escapeHtml(kind)}</td>`
      + `<td>${r.k ?? "&mdash;"}</td>`
      + `<td data-ns="${r.ns_median}">${formatNs(r.ns_median)}</td>`
      + `<td data-ns="${r.ns_p10}">${formatNs(r.ns_p10)}</td>`
      + `<td data-ns="${r.ns_p90}">${formatNs(r.ns_p90)}</td>`
      + `<td>${r.gather_adds}</td>`
      + `<td>${r.scatter_adds}</td>`
      + `<td>${r.preprocess_ms} ms</td>`
      + `<td data-bytes="${r.artifact_bytes}">${formatBytes(r.artifact_bytes)}</td>`
      + `</tr>`;
  }).join("");
  const skipped = report.errors.length
    ? `<p class="row-errors">skipped: ${report.errors
        .map((e) => `k=${e.k} (${escapeHtml(e.error)})`).join(", ")}</p>`
    : "";
  return `<table class="report-table">${head}${body}</table>${skipped}`;
}

/**
 * Main panel for one run. Charts appear only once status is "done";
 * anything earlier renders a status note so a half-finished run can
 * never be mistaken for results.
 */
export function runResultHtml(detail: RunDetail, stale: Set<number>): string {
  const label = shapeLabel(detail);
  const head = `<div class="result-head"><h2>run #${detail.id} &mdash; ${escapeHtml(label)}</h2>`
    + `${statusBadge(detail.status)}`
    + `${stale.has(detail.id) ? '<span class="stale-tag" title="a newer run exists for this shape">stale</span>' : ""}`
    + `</div>`;

  if (detail.status === "error") {
    const e = detail.error;
    return head + errorBanner(e ? `${e.error}: ${e.message}` : "run failed");
  }
  if (detail.status !== "done" || !detail.report) {
    return head + `<p class="pending-note">${detail.status} &mdash; charts appear when the run completes</p>`;
  }

  const report = detail.report;
  const line = latencyLineChart([reportToSeries(report, `run #${detail.id}`)],
                                reportBaselines(report),
                                `Latency vs k — ${label}`);
  const bars = bestKBarChart(reportBestKBars(report), `Best k vs baselines — ${label}`);
  const bestNote = report.best_k !== null
    ? `<p class="best-note">best k = <strong>${report.best_k}</strong></p>` : "";
  return head + bestNote
    + `<div class="chart-box" data-chart="line">${line}<button class="save-png" data-target="line">save PNG</button></div>`
    + `<div class="chart-box" data-chart="bars">${bars}<button class="save-png" data-target="bars">save PNG</button></div>`
    + reportTable(detail);
}

/** Overlay chart for compare mode: one series per completed run. */
export function compareHtml(details: RunDetail[]): string {
  const done = details.filter((d) => d.status === "done" && d.report);
  if (done.length < 2) {
    return `<p class="empty-note">pick two or more completed runs to overlay</p>`;
  }
  const series = done.map((d) =>
    reportToSeries(d.report!, `#${d.id} ${shapeLabel(d)}`));
  const chart = latencyLineChart(series, [], "Run comparison");
  const caption = done.map((d) => `#${d.id} ${escapeHtml(shapeLabel(d))}`).join(" vs ");
  return `<div class="chart-box" data-chart="compare">${chart}</div>`
    + `<p class="compare-caption">${caption} &mdash; no re-execution, reports as recorded</p>`;
}

/** Best-k table: one row per cache entry, exactly as the server returned it. */
export function bestKTableHtml(entries: BestKEntry[]): string {
  if (entries.length === 0) {
    return `<p class="empty-note">no completed sweeps yet &mdash; the table fills as runs finish</p>`;
  }
  const head = `<tr><th>m</th><th>n</th><th>bitwidth</th><th>best k</th>`
    + `<th>median latency</th><th>run</th></tr>`;
  const rows = entries.map((e) =>
    `<tr data-m="${e.m}" data-n="${e.n}" data-bitwidth="${e.bitwidth}">`
    + `<td>${e.m}</td><td>${e.n}</td><td>${escapeHtml(e.bitwidth)}</td>`
    + `<td class="bestk" data-bestk="${e.best_k}">${e.best_k}</td>`
    + `<td data-ns="${e.ns_median ?? ""}">${e.ns_median !== null ? formatNs(e.ns_median) : "&mdash;"}</td>`
    + `<td><a href="#run-${e.run_id}" class="run-link" data-id="${e.run_id}">#${e.run_id}</a></td>`
    + `</tr>`).join("");
  return `<table class="bestk-table">${head}${rows}</table>`;
}
