// @vitest-environment node
//
// End-to-end walkthrough against a real served fixture backend:
// settings → root chart → subclass click → property tab → select two
// properties → instances tab → filter → open filtered pane → connections
// tab → object bar click. Verifies displayed numbers equal API payloads and
// on-screen bar order equals payload order.

import { ChildProcess, spawn } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import { createServer } from "node:net";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it, vi } from "vitest";
import { Window } from "happy-dom";

import { ApiClient } from "../src/api.js";
import { App } from "../src/app.js";
import type { ChartJson, TableJson } from "../src/types.js";

const FIXTURE = `\
<http://x/Work> <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> <http://www.w3.org/2002/07/owl#Class> .
<http://x/Album> <http://www.w3.org/2000/01/rdf-schema#subClassOf> <http://x/Work> .
<http://x/Single> <http://www.w3.org/2000/01/rdf-schema#subClassOf> <http://x/Work> .
<http://x/a1> <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> <http://x/Album> .
<http://x/a2> <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> <http://x/Album> .
<http://x/s1> <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> <http://x/Single> .
<http://x/a1> <http://x/artist> <http://x/bob> .
<http://x/a2> <http://x/artist> <http://x/bob> .
<http://x/a1> <http://x/name> "A1" .
<http://x/bob> <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> <http://x/Person> .
<http://x/Person> <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> <http://www.w3.org/2002/07/owl#Class> .
`;

const window = new Window();
(globalThis as unknown as { document: unknown }).document = window.document;
(globalThis as unknown as { HTMLElement: unknown }).HTMLElement =
  window.HTMLElement;

let server: ChildProcess;
let baseUrl: string;
let fixturePath: string;

/** Every JSON payload the server returned, for displayed-numbers checks. */
const payloads: unknown[] = [];

const recordingFetch: typeof fetch = async (input, init) => {
  const response = await fetch(input, init);
  const type = response.headers.get("content-type") ?? "";
  if (type.includes("json") && !String(input).includes("/stream")) {
    try {
      payloads.push(await response.clone().json());
    } catch {
      // non-JSON body; nothing to record
    }
  }
  return response;
};

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const probe = createServer();
    probe.listen(0, "127.0.0.1", () => {
      const { port } = probe.address() as { port: number };
      probe.close(() => resolve(port));
    });
    probe.on("error", reject);
  });
}

async function waitForHealth(url: string): Promise<void> {
  const deadline = Date.now() + 30000;
  for (;;) {
    try {
      const response = await fetch(`${url}/health`);
      if (response.ok) return;
    } catch {
      // not up yet
    }
    if (Date.now() > deadline) throw new Error("backend did not come up");
    await new Promise((resolve) => setTimeout(resolve, 200));
  }
}

beforeAll(async () => {
  const dir = mkdtempSync(join(tmpdir(), "elinda-ui-"));
  fixturePath = join(dir, "g_music.nt");
  writeFileSync(fixturePath, FIXTURE);
  const port = await freePort();
  baseUrl = `http://127.0.0.1:${port}`;
  server = spawn(
    "python3",
    ["-m", "elinda.cli", "serve", "--data", fixturePath, "--port", String(port)],
    { cwd: join(import.meta.dirname, "..", ".."), stdio: "ignore" },
  );
  await waitForHealth(baseUrl);
});

afterAll(() => {
  server?.kill();
});

function barLabels(scope: HTMLElement): (string | undefined)[] {
  return [...scope.querySelectorAll(".bar-column")].map(
    (c) => (c as HTMLElement).dataset.label,
  );
}

function barCounts(scope: HTMLElement): string[] {
  return [...scope.querySelectorAll(".bar-count")].map(
    (c) => c.textContent ?? "",
  );
}

function paneElements(root: HTMLElement): HTMLElement[] {
  return [...root.querySelectorAll(".pane")] as HTMLElement[];
}

function lastChartPayload(view: string): ChartJson {
  const charts = payloads.filter(
    (p) => (p as ChartJson).view === view,
  ) as ChartJson[];
  return charts[charts.length - 1];
}

function lastTablePayload(): TableJson {
  const tables = payloads.filter(
    (p) => typeof (p as TableJson).sparql === "string",
  ) as TableJson[];
  return tables[tables.length - 1];
}

describe("scripted end-to-end exploration", () => {
  it("completes the full walkthrough without errors", async () => {
    const consoleErrors = vi.spyOn(console, "error");
    const root = document.createElement("div") as unknown as HTMLElement;
    const app = new App(root, new ApiClient(baseUrl, recordingFetch));
    await app.init();

    // --- settings form: embedded fixture dataset rooted at Work
    const source = root.querySelector(".settings-source") as HTMLInputElement;
    const rootClass = root.querySelector(".settings-root") as HTMLInputElement;
    source.value = fixturePath;
    rootClass.value = "http://x/Work";
    const form = root.querySelector("form.settings")!;
    form.dispatchEvent(new window.Event("submit", { cancelable: true }));
    await app.whenIdle();

    // --- root chart: bars in payload order, counts verbatim from payload
    expect(paneElements(root).length).toBe(1);
    expect(root.querySelector(".dataset-stats")!.textContent).toBe(
      "11 triples, 2 classes",
    );
    const rootChartPayload = lastChartPayload("subclass");
    expect(rootChartPayload.bars.map((b) => b.label)).toEqual([
      "http://x/Album",
      "http://x/Single",
    ]);
    const rootPaneEl = paneElements(root)[0];
    expect(barLabels(rootPaneEl)).toEqual(
      rootChartPayload.bars.map((b) => b.label),
    );
    expect(barCounts(rootPaneEl)).toEqual(
      rootChartPayload.bars.map((b) => String(b.instance_count)),
    );

    // the streamed completeness indicator settles on "complete"
    expect(
      (rootPaneEl.querySelector(".completeness") as HTMLElement).dataset.state,
    ).toBe("complete");

    // --- subclass click: Album opens a new pane below
    (
      rootPaneEl.querySelector(
        '.bar-column[data-label="http://x/Album"]',
      ) as HTMLElement
    ).click();
    await app.whenIdle();
    let panes = paneElements(root);
    expect(panes.length).toBe(2);
    expect(panes[1].querySelector(".pane-title")!.textContent).toBe(
      "Album (2)",
    );
    const albumPaneId = panes[1].dataset.paneId!;

    // --- property tab on the root pane; select two properties
    const rootPaneId = panes[0].dataset.paneId!;
    (
      panes[0].querySelector('.pane-tab[data-tab="properties"]') as HTMLElement
    ).click();
    await app.whenIdle();
    const propPayload = lastChartPayload("prop_out");
    const rdfType = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
    expect(propPayload.bars.map((b) => b.label)).toEqual([
      rdfType,
      "http://x/artist",
      "http://x/name",
    ]);
    let propPane = paneElements(root)[0];
    expect(barLabels(propPane)).toEqual(propPayload.bars.map((b) => b.label));

    (
      propPane.querySelector(
        `.bar-column[data-label="${rdfType}"]`,
      ) as HTMLElement
    ).click();
    await app.whenIdle();
    (
      paneElements(root)[0].querySelector(
        '.bar-column[data-label="http://x/artist"]',
      ) as HTMLElement
    ).click();
    await app.whenIdle();
    expect(app.store.view(rootPaneId).selectedProperties).toEqual([
      rdfType,
      "http://x/artist",
    ]);
    const selected = [
      ...paneElements(root)[0].querySelectorAll(".bar-column.selected"),
    ].map((c) => (c as HTMLElement).dataset.label);
    expect(selected).toEqual([rdfType, "http://x/artist"]);

    // --- instances tab: selected properties become columns
    (
      paneElements(root)[0].querySelector(
        '.pane-tab[data-tab="instances"]',
      ) as HTMLElement
    ).click();
    await app.whenIdle();
    let tablePayload = lastTablePayload();
    expect(tablePayload.columns).toEqual([rdfType, "http://x/artist"]);
    expect(tablePayload.total).toBe(3);
    let tableEl = paneElements(root)[0];
    expect(tableEl.querySelectorAll("tbody tr").length).toBe(
      tablePayload.rows.length,
    );
    expect(tableEl.querySelector(".table-total")!.textContent).toBe(
      `${tablePayload.total} instances`,
    );
    expect(tableEl.querySelector(".sparql-text")!.textContent).toBe(
      tablePayload.sparql,
    );

    // --- filter on the artist column: only Bob's works remain
    const filterInput = tableEl.querySelector(
      '.column-filter[data-column="http://x/artist"]',
    ) as HTMLInputElement;
    filterInput.value = "http://x/bob";
    filterInput.dispatchEvent(new window.Event("change"));
    await app.whenIdle();
    tablePayload = lastTablePayload();
    expect(tablePayload.total).toBe(2);
    tableEl = paneElements(root)[0];
    expect(tableEl.querySelectorAll("tbody tr").length).toBe(2);

    // --- open filtered pane: a Filter expansion adds a narrowed pane
    (tableEl.querySelector(".open-filtered") as HTMLElement).click();
    await app.whenIdle();
    panes = paneElements(root);
    expect(panes.length).toBe(3);
    const filteredPane = panes[2];
    expect(filteredPane.querySelector(".pane-title")!.textContent).toBe(
      "Work (2)",
    );
    expect(filteredPane.querySelector(".pane-filters")!.textContent).toContain(
      "http://x/bob",
    );

    // --- connections tab on the Album pane: object chart via artist
    const albumPane = paneElements(root).find(
      (p) => p.dataset.paneId === albumPaneId,
    )!;
    (
      albumPane.querySelector(
        '.pane-tab[data-tab="connections"]',
      ) as HTMLElement
    ).click();
    await app.whenIdle();
    const picker = paneElements(root)
      .find((p) => p.dataset.paneId === albumPaneId)!
      .querySelector(".connection-property") as HTMLSelectElement;
    picker.value = "http://x/artist";
    picker.dispatchEvent(new window.Event("change"));
    await app.whenIdle();
    const objectPayload = lastChartPayload("connections");
    expect(objectPayload.bars.map((b) => b.label)).toEqual(["http://x/Person"]);
    const connectionsPane = paneElements(root).find(
      (p) => p.dataset.paneId === albumPaneId,
    )!;
    expect(barLabels(connectionsPane)).toEqual(["http://x/Person"]);
    expect(barCounts(connectionsPane)).toEqual(
      objectPayload.bars.map((b) => String(b.instance_count)),
    );

    // --- object bar click: Person opens as a class pane
    (
      connectionsPane.querySelector(
        '.bar-column[data-label="http://x/Person"]',
      ) as HTMLElement
    ).click();
    await app.whenIdle();
    panes = paneElements(root);
    expect(panes.length).toBe(4);
    expect(panes[3].querySelector(".pane-title")!.textContent).toBe(
      "Person (1)",
    );

    // --- closing a pane removes it from the stack
    (panes[3].querySelector(".pane-close") as HTMLElement).click();
    await app.whenIdle();
    expect(paneElements(root).length).toBe(3);

    // --- a reload restores the stack from the session endpoint
    const sessionId = app.store.sessionId!;
    const reloadedRoot = document.createElement("div") as unknown as HTMLElement;
    const reloaded = new App(reloadedRoot, new ApiClient(baseUrl, recordingFetch));
    await reloaded.restoreSession(sessionId);
    await reloaded.whenIdle();
    expect(paneElements(reloadedRoot).length).toBe(3);

    expect(
      root.querySelector(".status-line")!.classList.contains("error"),
    ).toBe(false);
    expect(consoleErrors).not.toHaveBeenCalled();
  });

  it("autocomplete search opens a class pane", async () => {
    const root = document.createElement("div") as unknown as HTMLElement;
    const app = new App(root, new ApiClient(baseUrl, recordingFetch));
    await app.init();
    await app.createSession({
      mode: "embedded",
      source: fixturePath,
      root_class: "http://x/Work",
    });
    await app.whenIdle();

    const input = root.querySelector(".search-input") as HTMLInputElement;
    input.value = "Pe";
    input.dispatchEvent(new window.Event("input"));
    await app.whenIdle();
    const hits = [...root.querySelectorAll(".search-hit")] as HTMLElement[];
    expect(hits.map((h) => h.dataset.uri)).toEqual(["http://x/Person"]);
    expect(hits[0].textContent).toBe("Person (1)");
    hits[0].click();
    await app.whenIdle();
    const titles = paneElements(root).map(
      (p) => p.querySelector(".pane-title")!.textContent,
    );
    expect(titles).toContain("Person (1)");
  });
});
