/** Client-side session state: pane order, per-pane view state, request gating.
 *
 * All numbers live in the server payloads; the store only remembers which
 * payloads are current and how the user is looking at them.
 */

import type { PaneJson } from "./types.js";

export type TabName = "subclasses" | "properties" | "connections" | "instances";

export interface PaneViewState {
  activeTab: TabName;
  /** Property-chart visibility cutoff, fraction in [0, 1]. */
  threshold: number;
  windowStart: number;
  windowLen: number;
  /** Property bars picked in the Properties tab; become Instances columns. */
  selectedProperties: string[];
  /** Per-column filter input values in the Instances tab. */
  tableFilters: Record<string, string>;
  /** Property whose object chart the Connections tab shows. */
  connectionProperty: string | null;
  direction: "outgoing" | "incoming";
}

export function initialViewState(pane: PaneJson): PaneViewState {
  return {
    activeTab: "subclasses",
    threshold: pane.coverage_threshold,
    windowStart: 0,
    windowLen: 30,
    selectedProperties: [],
    tableFilters: {},
    connectionProperty: null,
    direction: "outgoing",
  };
}

/** Monotonic per-key tokens; responses carrying a superseded token are stale. */
export class RequestGate {
  private sequences = new Map<string, number>();

  begin(key: string): number {
    const next = (this.sequences.get(key) ?? 0) + 1;
    this.sequences.set(key, next);
    return next;
  }

  isCurrent(key: string, token: number): boolean {
    return this.sequences.get(key) === token;
  }
}

export class SessionStore {
  sessionId: string | null = null;
  stats: Record<string, number> = {};
  panes: PaneJson[] = [];
  views = new Map<string, PaneViewState>();

  reset(sessionId: string, stats: Record<string, number>): void {
    this.sessionId = sessionId;
    this.stats = stats;
    this.panes = [];
    this.views.clear();
  }

  addPane(pane: PaneJson): void {
    this.panes.push(pane);
    this.views.set(pane.id, initialViewState(pane));
  }

  removePane(paneId: string): void {
    this.panes = this.panes.filter((p) => p.id !== paneId);
    this.views.delete(paneId);
  }

  pane(paneId: string): PaneJson {
    const pane = this.panes.find((p) => p.id === paneId);
    if (!pane) throw new Error(`unknown pane ${paneId}`);
    return pane;
  }

  view(paneId: string): PaneViewState {
    const view = this.views.get(paneId);
    if (!view) throw new Error(`unknown pane ${paneId}`);
    return view;
  }
}
