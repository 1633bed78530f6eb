/**
 * Import job dashboard.
 *
 * Jobs are tracked by id (the id comes back from POST /imports, which a
 * script or operator hands to the reviewer). Non-terminal jobs are
 * re-polled every tick; terminal ones keep their last counts and are
 * never fetched again. A failed poll shows a stale-data banner and
 * polling simply continues.
 */

import { Api, ImportJob } from "./api.js";
import { clear, el } from "./dom.js";

const TERMINAL: ReadonlySet<string> = new Set(["complete", "failed"]);

export class ImportMonitor {
  private readonly jobs = new Map<string, ImportJob | null>();
  private readonly tbody: HTMLTableSectionElement;
  private readonly banner: HTMLElement;
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(
    private readonly api: Api,
    private readonly root: HTMLElement,
    private readonly onReviewRequest: (datasetId: string) => void = () => {},
  ) {
    const input = el("input", { placeholder: "job id", class: "job-input" });
    const button = el("button", { class: "track" }, "Track job");
    button.addEventListener("click", () => {
      const jobId = input.value.trim();
      if (jobId) {
        input.value = "";
        void this.track(jobId);
      }
    });
    this.banner = el("div", { class: "stale-banner", hidden: "hidden" }, "showing stale data: the service is unreachable");
    const table = el("table", { class: "jobs" });
    table.append(
      el(
        "thead",
        {},
        el(
          "tr",
          {},
          el("th", {}, "job"),
          el("th", {}, "dataset"),
          el("th", {}, "state"),
          el("th", {}, "discovered"),
          el("th", {}, "parsed"),
          el("th", {}, "aligned"),
          el("th", {}, "stored"),
          el("th", {}, ""),
        ),
      ),
    );
    this.tbody = el("tbody");
    table.append(this.tbody);
    root.append(el("div", { class: "toolbar" }, input, button), this.banner, table);
  }

  async track(jobId: string): Promise<void> {
    if (!this.jobs.has(jobId)) this.jobs.set(jobId, null);
    await this.tick();
  }

  start(intervalMs = 2000): void {
    if (this.timer === null) {
      this.timer = setInterval(() => void this.tick(), intervalMs);
    }
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  /** Poll every tracked, non-terminal job once and re-render. */
  async tick(): Promise<void> {
    let anyFailure = false;
    for (const [jobId, last] of this.jobs) {
      if (last && TERMINAL.has(last.state)) continue;
      try {
        this.jobs.set(jobId, await this.api.getJob(jobId));
      } catch {
        anyFailure = true; // keep the stale row, keep polling
      }
    }
    if (anyFailure) {
      this.banner.removeAttribute("hidden");
    } else {
      this.banner.setAttribute("hidden", "hidden");
    }
    this.render();
  }

  private render(): void {
    clear(this.tbody);
    for (const [jobId, job] of this.jobs) {
      const row = el("tr", { class: "job-row", "data-job-id": jobId });
      if (job === null) {
        row.append(el("td", {}, jobId), el("td", { colspan: "7" }, "loading…"));
        this.tbody.append(row);
        continue;
      }
      const state = el("span", { class: `state state-${job.state}` }, job.state);
      const actions = el("td", {});
      if (job.state === "awaiting_labels") {
        const link = el("a", { href: "#queue", class: "review-link" }, "review labels");
        link.addEventListener("click", (event) => {
          event.preventDefault();
          this.onReviewRequest(job.dataset_id);
        });
        actions.append(link);
      }
      if (job.state === "failed") {
        actions.append(el("span", { class: "failure-reason" }, job.reason));
      }
      row.append(
        el("td", {}, jobId),
        el("td", {}, job.dataset_id),
        el("td", {}, state),
        el("td", {}, String(job.counts.discovered)),
        el("td", {}, String(job.counts.parsed)),
        el("td", {}, String(job.counts.aligned)),
        el("td", {}, String(job.counts.stored)),
        actions,
      );
      this.tbody.append(row);
    }
  }
}
