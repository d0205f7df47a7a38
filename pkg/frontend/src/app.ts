/**
 * Dashboard controller: state, submission, and the 1 s polling loop.
 *
 * Deliberately DOM-free. main.ts feeds it form values and repaints on
 * every change notification; tests drive the same entry points against
 * a live server or a stubbed client.
 */

import { ApiClient, ApiError, OfflineError } from "./api.js";
import type { BestKEntry, RunDetail, RunSummary } from "./types.js";
import { validateForm, type FieldError, type SweepForm } from "./validate.js";

export const POLL_INTERVAL_MS = 1000;

export interface AppState {
  online: boolean;
  runs: RunSummary[];
  details: Map<number, RunDetail>;
  selectedId: number | null;
  compareIds: Set<number>;
  bestk: BestKEntry[];
  formErrors: FieldError[];
  banner: string | null;
}

const sleepMs = (ms: number) => new Promise<void>((r) => setTimeout(r, ms));

export class App {
  state: AppState = {
    online: true,
    runs: [],
    details: new Map(),
    selectedId: null,
    compareIds: new Set(),
    bestk: [],
    formErrors: [],
    banner: null,
  };

  private api: ApiClient;
  private onChange: () => void;
  private sleep: (ms: number) => Promise<void>;

  constructor(api: ApiClient, onChange: () => void = () => {},
              sleep: (ms: number) => Promise<void> = sleepMs) {
    this.api = api;
    this.onChange = onChange;
    this.sleep = sleep;
  }

  private notify(): void {
    this.onChange();
  }

  private handleFailure(err: unknown): void {
    if (err instanceof OfflineError) {
      this.state.online = false;
    } else if (err instanceof ApiError) {
      this.state.banner = err.display();
    } else {
      this.state.banner = String(err);
    }
    this.notify();
  }

  /**
   * Validate and submit. Returns the new run id, or null when the form
   * is invalid (in which case no request was made) or the POST failed.
   */
  async submitSweep(form: SweepForm): Promise<number | null> {
    this.state.banner = null;
    const { body, errors } = validateForm(form);
    if (!body) {
      this.state.formErrors = errors;
      this.notify();
      return null;
    }
    this.state.formErrors = [];
    try {
      const { id } = await this.api.submitBench(body);
      this.state.selectedId = id;
      await this.refreshRuns();
      return id;
    } catch (err) {
      this.handleFailure(err);
      return null;
    }
  }

  /**
   * Poll one run until it reaches a terminal status, refreshing the
   * run list and best-k table along the way. Resolves with the final
   * detail, or null when the server disappears mid-poll.
   */
  async pollRun(id: number, intervalMs = POLL_INTERVAL_MS): Promise<RunDetail | null> {
    for (;;) {
      let detail: RunDetail;
      try {
        detail = await this.api.getRun(id);
      } catch (err) {
        this.handleFailure(err);
        return null;
      }
      this.state.online = true;
      this.state.details.set(id, detail);
      this.notify();
      if (detail.status === "done" || detail.status === "error") {
        await this.refreshRuns();
        await this.refreshBestK();
        return detail;
      }
      await this.sleep(intervalMs);
    }
  }

  async refreshRuns(): Promise<void> {
    try {
      this.state.runs = await this.api.getRuns();
      this.state.online = true;
    } catch (err) {
      this.handleFailure(err);
      return;
    }
    this.notify();
  }

  async refreshBestK(): Promise<void> {
    try {
      this.state.bestk = await this.api.getBestKTable();
      this.state.online = true;
    } catch (err) {
      this.handleFailure(err);
      return;
    }
    this.notify();
  }

  /** Select a run for the main panel, fetching its detail if needed. */
  async select(id: number): Promise<void> {
    this.state.selectedId = id;
    if (!this.state.details.has(id)) {
      try {
        this.state.details.set(id, await this.api.getRun(id));
        this.state.online = true;
      } catch (err) {
        this.handleFailure(err);
        return;
      }
    }
    this.notify();
  }

  toggleCompare(id: number): void {
    if (this.state.compareIds.has(id)) {
      this.state.compareIds.delete(id);
    } else {
      this.state.compareIds.add(id);
    }
    this.notify();
  }

  /** Details of the compare selection, completed runs only. */
  compareSelection(): RunDetail[] {
    return [...this.state.compareIds]
      .sort((a, b) => a - b)
      .map((id) => this.state.details.get(id))
      .filter((d): d is RunDetail => d !== undefined);
  }

  dismissBanner(): void {
    this.state.banner = null;
    this.notify();
  }
}
