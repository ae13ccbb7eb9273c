/** Exploration pane frame: header, breadcrumb trail, tabs, content slot.
 *
 * The frame is pure chrome — the active tab's content (chart, table, …) is
 * rendered by the app and mounted into the returned content element.
 */

import type { PaneJson } from "../types.js";
import type { TabName } from "../store.js";
import { renderBreadcrumbs } from "./breadcrumbs.js";

export const TABS: { name: TabName; title: string }[] = [
  { name: "subclasses", title: "Subclasses" },
  { name: "properties", title: "Property data" },
  { name: "connections", title: "Connections" },
  { name: "instances", title: "Instances" },
];

export interface PaneHandlers {
  onClose: (paneId: string) => void;
  onTab: (paneId: string, tab: TabName) => void;
}

export interface PaneFrame {
  root: HTMLElement;
  content: HTMLElement;
}

export function renderPaneFrame(
  pane: PaneJson,
  activeTab: TabName,
  handlers: PaneHandlers,
  display: (label: string) => string = (label) => label,
): PaneFrame {
  const root = document.createElement("section");
  root.className = "pane";
  root.dataset.paneId = pane.id;

  const header = document.createElement("header");
  header.className = "pane-header";
  const title = document.createElement("h2");
  title.className = "pane-title";
  title.textContent = `${pane.bar.display_label} (${pane.bar.size})`;
  const close = document.createElement("button");
  close.className = "pane-close";
  close.textContent = "✕";
  close.addEventListener("click", () => handlers.onClose(pane.id));
  header.append(title, close);
  root.appendChild(header);

  root.appendChild(renderBreadcrumbs(pane.breadcrumb, display));

  if (pane.active_filters.length) {
    const filters = document.createElement("div");
    filters.className = "pane-filters";
    filters.textContent = pane.active_filters
      .map((f) => `${display(f.property)} ${f.comparator} ${f.value.value}`)
      .join(" ∧ ");
    root.appendChild(filters);
  }

  const tabs = document.createElement("div");
  tabs.className = "pane-tabs";
  for (const tab of TABS) {
    const button = document.createElement("button");
    button.className = "pane-tab";
    button.dataset.tab = tab.name;
    button.textContent = tab.title;
    if (tab.name === activeTab) button.classList.add("active");
    button.addEventListener("click", () => handlers.onTab(pane.id, tab.name));
    tabs.appendChild(button);
  }
  root.appendChild(tabs);

  const content = document.createElement("div");
  content.className = "pane-content";
  root.appendChild(content);
  return { root, content };
}
