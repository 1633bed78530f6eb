/**
 * Shell: three tabs over one API client. State lives in the API and the
 * in-flight requests, nowhere else.
 *
 * Configuration is a single value: the API base URL (plus an optional
 * bearer token), read from window.HARP_API_URL / window.HARP_API_TOKEN
 * set in index.html. An empty base URL means same origin, which is what
 * you want when the bundle is served by the API's /ui route.
 */

import { Api, Config } from "./api.js";
import { DictionaryEditor } from "./dictionary.js";
import { el } from "./dom.js";
import { ImportMonitor } from "./monitor.js";
import { PendingQueue } from "./queue.js";

declare global {
  interface Window {
    HARP_API_URL?: string;
    HARP_API_TOKEN?: string;
  }
}

export function loadConfig(): Config {
  return { baseUrl: window.HARP_API_URL ?? "", token: window.HARP_API_TOKEN };
}

export function mountApp(root: HTMLElement, api: Api): { monitor: ImportMonitor; queue: PendingQueue } {
  const tabs = el("nav", { class: "tabs" });
  const panes: Record<string, HTMLElement> = {
    queue: el("section", { id: "queue" }),
    monitor: el("section", { id: "monitor" }),
    dictionary: el("section", { id: "dictionary" }),
  };

  const queue = new PendingQueue(api, panes["queue"]!);
  const monitor = new ImportMonitor(api, panes["monitor"]!, (datasetId) => {
    queue.setDatasetFilter(datasetId);
    void queue.refresh();
    show("queue");
  });
  const dictionary = new DictionaryEditor(api, panes["dictionary"]!);

  function show(name: string): void {
    for (const [paneName, pane] of Object.entries(panes)) {
      pane.hidden = paneName !== name;
    }
    tabs.querySelectorAll("button").forEach((b) => {
      b.classList.toggle("active", b.dataset["pane"] === name);
    });
  }

  for (const [name, title] of [
    ["queue", "Label queue"],
    ["monitor", "Imports"],
    ["dictionary", "Dictionary"],
  ] as const) {
    const button = el("button", { "data-pane": name }, title);
    button.addEventListener("click", () => {
      show(name);
      if (name === "queue") void queue.refresh();
      if (name === "dictionary") void dictionary.refresh();
    });
    tabs.append(button);
  }

  root.append(el("header", {}, el("h1", {}, "harp review"), tabs), ...Object.values(panes));
  show("queue");
  void queue.refresh();
  monitor.start(2000);
  return { monitor, queue };
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  mountApp(document.getElementById("app")!, new Api(loadConfig()));
}
