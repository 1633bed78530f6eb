/**
 * The pending-mapping review queue.
 *
 * Each row shows one raw label with its ranked suggestions and three
 * controls: accept (one click per suggestion), reject, and a manual
 * override. Every decision is exactly one POST; a row leaves the queue
 * only on a 200. A 409 means another session got there first: the row
 * flips to the decided state the API reports. Any other error shows its
 * machine code inline and the row stays actionable.
 */

import { Api, ApiFailure, Mapping } from "./api.js";
import { clear, el, fmtScore } from "./dom.js";

export class PendingQueue {
  private datasetFilter: string | undefined;
  private readonly table: HTMLTableSectionElement;
  private readonly status: HTMLElement;
  private readonly filterInput: HTMLInputElement;

  constructor(private readonly api: Api, private readonly root: HTMLElement) {
    this.filterInput = el("input", {
      placeholder: "filter by dataset id",
      class: "dataset-filter",
    });
    const applyFilter = el("button", { class: "load" }, "Load queue");
    applyFilter.addEventListener("click", () => {
      this.datasetFilter = this.filterInput.value.trim() || undefined;
      void this.refresh();
    });
    this.status = el("div", { class: "queue-status" });
    const table = el("table", { class: "queue" });
    table.append(
      el(
        "thead",
        {},
        el(
          "tr",
          {},
          el("th", {}, "dataset"),
          el("th", {}, "raw label"),
          el("th", {}, "suggestions"),
          el("th", {}, "decision"),
        ),
      ),
    );
    this.table = el("tbody");
    table.append(this.table);
    root.append(el("div", { class: "toolbar" }, this.filterInput, applyFilter), this.status, table);
  }

  setDatasetFilter(datasetId: string): void {
    this.datasetFilter = datasetId || undefined;
    this.filterInput.value = datasetId;
  }

  async refresh(): Promise<void> {
    let pending: Mapping[];
    try {
      pending = await this.api.listMappings(this.datasetFilter, "pending");
    } catch (err) {
      this.status.textContent = err instanceof ApiFailure ? `cannot load queue: ${err.body.code}` : "cannot load queue";
      return;
    }
    this.status.textContent = pending.length ? `${pending.length} pending` : "queue is empty";
    clear(this.table);
    for (const mapping of pending) {
      this.table.append(this.renderRow(mapping));
    }
  }

  rowCount(): number {
    return this.table.querySelectorAll("tr.mapping-row:not(.decided)").length;
  }

  private renderRow(mapping: Mapping): HTMLTableRowElement {
    const row = el("tr", { class: "mapping-row", "data-mapping-id": mapping.mapping_id });
    const suggestions = el("td", { class: "suggestions" });
    for (const suggestion of mapping.suggestions) {
      const chip = el(
        "button",
        { class: "suggestion", title: suggestion.basis },
        `${suggestion.canonical_label} ${fmtScore(suggestion.score)}`,
      );
      chip.addEventListener("click", () => void this.decide(row, mapping, "accept", suggestion.canonical_label));
      suggestions.append(chip);
    }

    const manualInput = el("input", { placeholder: "canonical label", class: "manual-input" });
    const manualButton = el("button", { class: "manual" }, "Manual");
    manualButton.addEventListener("click", () => {
      const canonical = manualInput.value.trim();
      if (!canonical) {
        this.rowError(row, "enter a canonical label");
        return;
      }
      void this.decide(row, mapping, "manual", canonical);
    });
    const rejectButton = el("button", { class: "reject" }, "Reject");
    rejectButton.addEventListener("click", () => void this.decide(row, mapping, "reject"));

    row.append(
      el("td", {}, mapping.dataset_id),
      el("td", { class: "raw-label" }, mapping.raw_label),
      suggestions,
      el(
        "td",
        { class: "controls" },
        rejectButton,
        manualInput,
        manualButton,
        el("span", { class: "row-error", role: "alert" }),
      ),
    );
    return row;
  }

  private rowError(row: HTMLTableRowElement, text: string): void {
    const slot = row.querySelector(".row-error");
    if (slot) slot.textContent = text;
  }

  private async decide(
    row: HTMLTableRowElement,
    mapping: Mapping,
    action: "accept" | "reject" | "manual",
    canonical?: string,
  ): Promise<void> {
    this.rowError(row, "");
    try {
      await this.api.decide(mapping.mapping_id, action, canonical);
    } catch (err) {
      if (err instanceof ApiFailure && err.body.code === "mapping_already_decided") {
        // another session decided first: the server is authoritative
        this.showDecided(row, String(err.body.detail["status"] ?? "decided"),
          (err.body.detail["canonical_label"] as string | null) ?? null);
        return;
      }
      this.rowError(row, err instanceof ApiFailure ? err.body.code : "request failed");
      return;
    }
    row.remove();
    const left = this.rowCount();
    this.status.textContent = left ? `${left} pending` : "queue is empty";
  }

  private showDecided(row: HTMLTableRowElement, status: string, canonical: string | null): void {
    row.classList.add("decided");
    const controls = row.querySelector(".controls");
    if (controls) {
      clear(controls as HTMLElement);
      controls.append(
        el("span", { class: "decided-state" }, canonical ? `${status} → ${canonical}` : status),
      );
    }
  }
}
