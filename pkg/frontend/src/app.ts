/** Application shell: wires the API client to the pane-stack UI.
 *
 * All aggregation happens server-side; this module only fetches payloads,
 * renders them verbatim, and translates clicks back into API calls. Stale
 * responses (superseded threshold changes, re-renders) are discarded via
 * per-key request sequence numbers.
 */

import { ApiClient, ApiError } from "./api.js";
import { renderChart } from "./components/chart.js";
import { renderPaneFrame } from "./components/pane.js";
import { renderSearchBox, updateSuggestions } from "./components/search.js";
import { renderSettings, SettingsValues } from "./components/settings.js";
import { renderTable } from "./components/table.js";
import { RequestGate, SessionStore, TabName } from "./store.js";
import type {
  BarJson,
  ChartJson,
  FilterSpec,
  PaneJson,
  StreamSnapshot,
} from "./types.js";

export interface AppOptions {
  /** Feed completeness indicators from the NDJSON chart stream. */
  streaming?: boolean;
}

function filterValue(raw: string): FilterSpec["value"] {
  return raw.startsWith("http://") || raw.startsWith("https://")
    ? { type: "uri", value: raw }
    : { type: "literal", value: raw };
}

export class App {
  readonly store = new SessionStore();
  private readonly gate = new RequestGate();
  private readonly pending = new Set<Promise<unknown>>();
  private readonly streaming: boolean;
  private searchBox: HTMLElement | null = null;
  private statusLine: HTMLElement | null = null;

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient,
    options: AppOptions = {},
  ) {
    this.streaming = options.streaming ?? true;
  }

  /** Resolves once every in-flight fetch kicked off by UI events settled. */
  async whenIdle(): Promise<void> {
    while (this.pending.size) {
      await Promise.allSettled([...this.pending]);
    }
  }

  private track<T>(work: Promise<T>): Promise<T | undefined> {
    const guarded = work.catch((error) => {
      this.showError(error);
      return undefined;
    });
    this.pending.add(guarded);
    guarded.finally(() => this.pending.delete(guarded));
    return guarded;
  }

  private showError(error: unknown): void {
    if (this.statusLine) {
      const message =
        error instanceof ApiError
          ? `${error.status}: ${error.message}`
          : String(error);
      this.statusLine.textContent = message;
      this.statusLine.classList.add("error");
    }
  }

  // ------------------------------------------------------------- lifecycle

  async init(): Promise<void> {
    const fragment = globalThis.location?.hash ?? "";
    const match = /#s=([0-9a-f]+)/.exec(fragment);
    if (match) {
      try {
        await this.restoreSession(match[1]);
        return;
      } catch {
        // fall through to the settings form on a dead session id
      }
    }
    this.renderAll();
  }

  async createSession(values: SettingsValues): Promise<void> {
    const created = await this.api.createSession(values);
    this.store.reset(created.session_id, created.stats as never);
    this.store.addPane(created.initial_pane);
    if (globalThis.location) {
      globalThis.location.hash = `#s=${created.session_id}`;
    }
    this.renderAll();
  }

  async restoreSession(sessionId: string): Promise<void> {
    const info = await this.api.getSession(sessionId);
    this.store.reset(info.session_id, info.stats as never);
    for (const pane of info.panes) this.store.addPane(pane);
    this.renderAll();
  }

  // -------------------------------------------------------------- actions

  async expandFromBar(
    paneId: string,
    bar: BarJson,
    expansion: "subclass" | "filter",
    filters?: FilterSpec[],
  ): Promise<void> {
    const sessionId = this.store.sessionId!;
    const pane = await this.api.expand(sessionId, {
      parent_pane: paneId,
      label: bar.label,
      expansion,
      filters,
    });
    this.store.addPane(pane);
    this.renderAll();
  }

  async openClassPane(classUri: string): Promise<void> {
    const pane = await this.api.openClassPane(this.store.sessionId!, classUri);
    this.store.addPane(pane);
    this.renderAll();
  }

  async closePane(paneId: string): Promise<void> {
    await this.api.closePane(paneId);
    this.store.removePane(paneId);
    this.renderAll();
  }

  setTab(paneId: string, tab: TabName): void {
    this.store.view(paneId).activeTab = tab;
    this.renderAll();
  }

  setThreshold(paneId: string, threshold: number): void {
    this.store.view(paneId).threshold = threshold;
    this.renderAll();
  }

  toggleProperty(paneId: string, property: string): void {
    const view = this.store.view(paneId);
    const index = view.selectedProperties.indexOf(property);
    if (index >= 0) view.selectedProperties.splice(index, 1);
    else view.selectedProperties.push(property);
    this.renderAll();
  }

  setConnectionProperty(paneId: string, property: string): void {
    this.store.view(paneId).connectionProperty = property;
    this.renderAll();
  }

  setTableFilter(paneId: string, column: string, value: string): void {
    const view = this.store.view(paneId);
    if (value) view.tableFilters[column] = value;
    else delete view.tableFilters[column];
    this.renderAll();
  }

  setWindow(paneId: string, windowStart: number): void {
    this.store.view(paneId).windowStart = windowStart;
    this.renderAll();
  }

  private tableFilterSpecs(paneId: string): FilterSpec[] {
    const view = this.store.view(paneId);
    return Object.entries(view.tableFilters).map(([property, raw]) => ({
      property,
      comparator: "equals",
      value: filterValue(raw),
    }));
  }

  // ------------------------------------------------------------ rendering

  renderAll(): void {
    this.root.textContent = "";
    this.root.appendChild(this.renderHeader());
    this.statusLine = document.createElement("div");
    this.statusLine.className = "status-line";
    this.root.appendChild(this.statusLine);
    if (!this.store.sessionId) return;
    const stack = document.createElement("main");
    stack.className = "pane-stack";
    for (const pane of this.store.panes) {
      stack.appendChild(this.renderPane(pane));
    }
    this.root.appendChild(stack);
  }

  private renderHeader(): HTMLElement {
    const header = document.createElement("header");
    header.className = "app-header";
    header.appendChild(
      renderSettings((values) => void this.track(this.createSession(values))),
    );
    if (this.store.sessionId) {
      const stats = document.createElement("span");
      stats.className = "dataset-stats";
      stats.textContent = `${this.store.stats.triple_count} triples, ${this.store.stats.class_count} classes`;
      header.appendChild(stats);
      this.searchBox = renderSearchBox({
        onQuery: (q) => void this.track(this.runSearch(q)),
        onPick: (hit) => void this.track(this.openClassPane(hit.uri)),
      });
      header.appendChild(this.searchBox);
    }
    return header;
  }

  private async runSearch(q: string): Promise<void> {
    const token = this.gate.begin("search");
    const { classes } = await this.api.searchClasses(this.store.sessionId!, q);
    if (!this.gate.isCurrent("search", token) || !this.searchBox) return;
    updateSuggestions(this.searchBox, classes, (hit) =>
      void this.track(this.openClassPane(hit.uri)),
    );
  }

  private renderPane(pane: PaneJson): HTMLElement {
    const view = this.store.view(pane.id);
    const frame = renderPaneFrame(pane, view.activeTab, {
      onClose: (id) => void this.track(this.closePane(id)),
      onTab: (id, tab) => this.setTab(id, tab),
    });
    void this.track(this.renderContent(pane, frame.content));
    return frame.root;
  }

  private async renderContent(
    pane: PaneJson,
    target: HTMLElement,
  ): Promise<void> {
    const view = this.store.view(pane.id);
    const key = `content:${pane.id}`;
    const token = this.gate.begin(key);
    let content: HTMLElement;
    switch (view.activeTab) {
      case "subclasses":
        content = await this.subclassesTab(pane);
        break;
      case "properties":
        content = await this.propertiesTab(pane);
        break;
      case "connections":
        content = await this.connectionsTab(pane);
        break;
      case "instances":
        content = await this.instancesTab(pane);
        break;
    }
    if (!this.gate.isCurrent(key, token)) return;
    target.textContent = "";
    target.appendChild(content);
  }

  private completenessIndicator(pane: PaneJson, view: string): HTMLElement {
    const indicator = document.createElement("div");
    indicator.className = "completeness";
    indicator.dataset.state = "pending";
    indicator.textContent = "…";
    if (!this.streaming) {
      indicator.dataset.state = "complete";
      indicator.textContent = "complete";
      return indicator;
    }
    const apply = (snapshot: StreamSnapshot) => {
      if (snapshot.complete) {
        indicator.dataset.state = "complete";
        indicator.textContent = "complete";
      } else {
        indicator.dataset.state = "partial";
        indicator.textContent = `${Math.round(snapshot.fraction * 100)}% processed`;
      }
    };
    void this.track(this.api.streamChart(pane.id, view, apply));
    return indicator;
  }

  private async subclassesTab(pane: PaneJson): Promise<HTMLElement> {
    const view = this.store.view(pane.id);
    const chart = await this.api.getChart(pane.id, {
      view: "subclass",
      window_start: view.windowStart,
      window_len: view.windowLen,
    });
    const wrapper = document.createElement("div");
    wrapper.appendChild(this.completenessIndicator(pane, "subclass"));
    wrapper.appendChild(
      renderChart(chart, {
        onBarClick: (bar) =>
          void this.track(this.expandFromBar(pane.id, bar, "subclass")),
        onWindow: (start) => this.setWindow(pane.id, start),
      }),
    );
    return wrapper;
  }

  private async propertiesTab(pane: PaneJson): Promise<HTMLElement> {
    const view = this.store.view(pane.id);
    const chart = await this.api.getChart(pane.id, {
      view: "prop_out",
      threshold: view.threshold,
      window_start: view.windowStart,
      window_len: view.windowLen,
    });
    const wrapper = document.createElement("div");

    const controls = document.createElement("div");
    controls.className = "threshold-control";
    const slider = document.createElement("input");
    slider.type = "range";
    slider.min = "0";
    slider.max = "100";
    slider.value = String(Math.round(view.threshold * 100));
    slider.addEventListener("change", () =>
      this.setThreshold(pane.id, Number(slider.value) / 100),
    );
    const readout = document.createElement("span");
    readout.className = "threshold-readout";
    readout.textContent = `coverage ≥ ${Math.round(view.threshold * 100)}%`;
    controls.append(slider, readout);
    wrapper.appendChild(controls);

    wrapper.appendChild(this.completenessIndicator(pane, "prop_out"));
    wrapper.appendChild(
      renderChart(chart, {
        onBarClick: (bar) => this.toggleProperty(pane.id, bar.label),
        onWindow: (start) => this.setWindow(pane.id, start),
        isSelected: (bar) => view.selectedProperties.includes(bar.label),
      }),
    );
    return wrapper;
  }

  private async connectionsTab(pane: PaneJson): Promise<HTMLElement> {
    const view = this.store.view(pane.id);
    const propChart = await this.api.getChart(pane.id, {
      view: view.direction === "outgoing" ? "prop_out" : "prop_in",
      threshold: 0,
    });
    const wrapper = document.createElement("div");
    const picker = document.createElement("select");
    picker.className = "connection-property";
    const placeholder = document.createElement("option");
    placeholder.value = "";
    placeholder.textContent = "choose a property…";
    picker.appendChild(placeholder);
    for (const bar of propChart.bars) {
      const option = document.createElement("option");
      option.value = bar.label;
      option.textContent = bar.display_label;
      if (bar.label === view.connectionProperty) option.selected = true;
      picker.appendChild(option);
    }
    picker.addEventListener("change", () =>
      this.setConnectionProperty(pane.id, picker.value),
    );
    wrapper.appendChild(picker);

    if (view.connectionProperty) {
      const objects = await this.api.getChart(pane.id, {
        view: "connections",
        property: view.connectionProperty,
        direction: view.direction,
      });
      wrapper.appendChild(
        renderChart(objects, {
          onBarClick: (bar) => {
            if (bar.bar_type === "class" && !bar.pseudo) {
              void this.track(this.openClassPane(bar.label));
            }
          },
        }),
      );
    }
    return wrapper;
  }

  private async instancesTab(pane: PaneJson): Promise<HTMLElement> {
    const view = this.store.view(pane.id);
    const filters = this.tableFilterSpecs(pane.id);
    const table = await this.api.getTable(pane.id, {
      columns: view.selectedProperties,
      filters,
    });
    return renderTable(table, view.tableFilters, {
      onFilterChange: (column, value) =>
        this.setTableFilter(pane.id, column, value),
      onOpenFilteredPane: () => {
        const specs = this.tableFilterSpecs(pane.id);
        if (!specs.length) return;
        const ownBar = {
          label: pane.bar.label,
        } as BarJson;
        void this.track(
          this.expandFromBar(pane.id, ownBar, "filter", specs),
        );
      },
    });
  }
}

export function mount(
  root: HTMLElement,
  baseUrl: string,
  options: AppOptions = {},
): App {
  const app = new App(root, new ApiClient(baseUrl), options);
  void app.init();
  return app;
}
