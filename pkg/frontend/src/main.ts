/**
 * DOM bootstrap. Reads the form, hands everything to App, and repaints
 * fragments from views.ts whenever state changes.
 */

import { ApiClient } from "./api.js";
import { App } from "./app.js";
import type { SweepForm } from "./validate.js";
import {
  bestKTableHtml,
  compareHtml,
  errorBanner,
  offlineBanner,
  runListHtml,
  runResultHtml,
  staleRunIds,
} from "./views.js";

const $ = (id: string) => document.getElementById(id) as HTMLElement;
const input = (id: string) => document.getElementById(id) as HTMLInputElement;

const api = new ApiClient("");
const app = new App(api, render);

function readForm(): SweepForm {
  return {
    m: input("f-m").value,
    n: input("f-n").value,
    bitwidth: (document.getElementById("f-bitwidth") as HTMLSelectElement)
      .value as SweepForm["bitwidth"],
    kRange: input("f-krange").value,
    reps: input("f-reps").value,
    threads: input("f-threads").value,
  };
}

function render(): void {
  const s = app.state;
  const stale = staleRunIds(s.runs);

  const banners: string[] = [];
  if (!s.online) banners.push(offlineBanner());
  if (s.banner) banners.push(errorBanner(s.banner));
  $("banners").innerHTML = banners.join("");

  $("form-errors").innerHTML = s.formErrors
    .map((e) => `<li data-field="${e.field}">${e.message}</li>`)
    .join("");

  (document.getElementById("f-submit") as HTMLButtonElement).disabled = !s.online;

  $("run-list").innerHTML = runListHtml(s.runs, s.selectedId, s.compareIds, stale);

  const detail = s.selectedId !== null ? s.details.get(s.selectedId) : undefined;
  $("panel-sweep").innerHTML = detail
    ? runResultHtml(detail, stale)
    : `<p class="empty-note">submit a sweep or pick a run from the list</p>`;

  $("panel-compare").innerHTML = compareHtml(app.compareSelection());
  $("panel-bestk").innerHTML = bestKTableHtml(s.bestk);
}

// ============================================================================
// Events
// ============================================================================

$("sweep-form").addEventListener("submit", (ev) => {
  ev.preventDefault();
  void app.submitSweep(readForm()).then((id) => {
    if (id !== null) void app.pollRun(id);
  });
});

$("run-list").addEventListener("click", (ev) => {
  const target = ev.target as HTMLElement;
  const box = target.closest(".compare-box") as HTMLInputElement | null;
  if (box) {
    const id = Number(box.dataset.id);
    app.toggleCompare(id);
    if (!app.state.details.has(id)) void app.select(id);
    return;
  }
  const item = target.closest(".run-item") as HTMLElement | null;
  if (item) void app.select(Number(item.dataset.id));
});

for (const btn of document.querySelectorAll<HTMLButtonElement>(".tab")) {
  btn.addEventListener("click", () => {
    for (const b of document.querySelectorAll(".tab")) b.classList.remove("active");
    btn.classList.add("active");
    for (const p of document.querySelectorAll<HTMLElement>(".panel")) {
      p.style.display = p.id === `panel-${btn.dataset.tab}` ? "" : "none";
    }
  });
}

document.body.addEventListener("click", (ev) => {
  const target = ev.target as HTMLElement;
  if (target.classList.contains("save-png")) {
    const svg = target.parentElement?.querySelector("svg");
    if (svg) savePng(svg, `chart-${target.dataset.target ?? "export"}.png`);
  }
  const link = target.closest(".run-link") as HTMLElement | null;
  if (link) {
    ev.preventDefault();
    void app.select(Number(link.dataset.id));
    (document.querySelector('.tab[data-tab="sweep"]') as HTMLButtonElement).click();
  }
});

/** Rasterize an SVG chart and trigger a download. */
function savePng(svg: SVGElement, filename: string): void {
  const xml = new XMLSerializer().serializeToString(svg);
  const img = new Image();
  img.onload = () => {
    const canvas = document.createElement("canvas");
    canvas.width = 1280;
    canvas.height = 640;
    const ctx = canvas.getContext("2d")!;
    ctx.fillStyle = "#0d1117";
    ctx.fillRect(0, 0, canvas.width, canvas.height);
    ctx.drawImage(img, 0, 0, canvas.width, canvas.height);
    const a = document.createElement("a");
    a.href = canvas.toDataURL("image/png");
    a.download = filename;
    a.click();
  };
  img.src = "data:image/svg+xml;charset=utf-8," + encodeURIComponent(xml);
}

// ============================================================================
// Startup
// ============================================================================

void app.refreshRuns();
void app.refreshBestK();

api.getSysInfo()
  .then((info) => {
    $("sysinfo").textContent = `${info.cpu} · ${info.threads} threads · v${info.version}`;
  })
  .catch(() => {
    $("sysinfo").textContent = "server offline";
  });

// Light background refresh so runs submitted elsewhere (or a restarted
// server) show up without a reload; per-run progress uses pollRun.
setInterval(() => {
  if (!document.hidden) {
    void app.refreshRuns();
    void app.refreshBestK();
  }
}, 5000);

render();
