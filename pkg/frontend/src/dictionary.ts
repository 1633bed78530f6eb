/**
 * Canonical-label dictionary: the list plus a small add form.
 *
 * The empty-name case never reaches the network; everything else is the
 * server's call, with 409 duplicates shown inline.
 */

import { Api, ApiFailure } from "./api.js";
import { clear, el } from "./dom.js";

export class DictionaryEditor {
  private readonly tbody: HTMLTableSectionElement;
  private readonly error: HTMLElement;
  private readonly nameInput: HTMLInputElement;
  private readonly kindSelect: HTMLSelectElement;
  private readonly descriptionInput: HTMLInputElement;
  private readonly aliasesInput: HTMLInputElement;

  constructor(private readonly api: Api, private readonly root: HTMLElement) {
    this.nameInput = el("input", { placeholder: "canonical label", class: "name-input" });
    this.kindSelect = el("select", { class: "kind-select" });
    for (const kind of ["state", "transition", "fall"]) {
      this.kindSelect.append(el("option", { value: kind }, kind));
    }
    this.descriptionInput = el("input", { placeholder: "description", class: "description-input" });
    this.aliasesInput = el("input", { placeholder: "aliases, comma separated", class: "aliases-input" });
    const addButton = el("button", { class: "add-label" }, "Add label");
    addButton.addEventListener("click", () => void this.add());
    this.error = el("span", { class: "form-error", role: "alert" });

    const table = el("table", { class: "dictionary" });
    table.append(
      el(
        "thead",
        {},
        el("tr", {}, el("th", {}, "label"), el("th", {}, "kind"), el("th", {}, "description"), el("th", {}, "aliases")),
      ),
    );
    this.tbody = el("tbody");
    table.append(this.tbody);
    root.append(
      el(
        "div",
        { class: "toolbar" },
        this.nameInput,
        this.kindSelect,
        this.descriptionInput,
        this.aliasesInput,
        addButton,
        this.error,
      ),
      table,
    );
  }

  async refresh(): Promise<void> {
    const { labels } = await this.api.getDictionary();
    clear(this.tbody);
    for (const [name, entry] of Object.entries(labels)) {
      this.tbody.append(
        el(
          "tr",
          { class: "label-row" },
          el("td", { class: "label-name" }, name),
          el("td", {}, entry.kind),
          el("td", {}, entry.description),
          el("td", {}, entry.aliases.join(", ")),
        ),
      );
    }
  }

  private async add(): Promise<void> {
    this.error.textContent = "";
    const name = this.nameInput.value.trim();
    if (!name) {
      this.error.textContent = "label name must not be empty";
      return; // client-side block: no request leaves the browser
    }
    const aliases = this.aliasesInput.value
      .split(",")
      .map((a) => a.trim())
      .filter(Boolean);
    try {
      await this.api.addLabel(name, this.kindSelect.value, this.descriptionInput.value.trim(), aliases);
    } catch (err) {
      this.error.textContent = err instanceof ApiFailure ? err.body.code : "request failed";
      return;
    }
    this.nameInput.value = "";
    this.descriptionInput.value = "";
    this.aliasesInput.value = "";
    await this.refresh();
  }
}
