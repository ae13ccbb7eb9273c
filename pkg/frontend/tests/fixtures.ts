/** Hand-written API payloads mirroring the backend's music fixture. */

import type { BarJson, ChartJson, PaneJson, TableJson } from "../src/types.js";

export function classBar(
  label: string,
  name: string,
  count: number,
  coverage: number,
  subclasses = 0,
): BarJson {
  return {
    label,
    display_label: name,
    bar_type: "class",
    pseudo: false,
    instance_count: count,
    coverage,
    average_per_instance: 1,
    direct_subclass_count: subclasses,
    total_subclass_count: subclasses,
  };
}

export const workChart: ChartJson = {
  bars: [
    classBar("http://x/Album", "Album", 2, 2 / 3),
    classBar("http://x/Single", "Single", 1, 1 / 3),
    classBar("http://x/EP", "EP", 0, 0),
  ],
  total_bars: 3,
  visible_bars: 3,
  hidden_count: 0,
  window_start: 0,
};

export const workPane: PaneJson = {
  id: "abc.p0",
  session_id: "abc",
  parent_pane: null,
  selected_label: null,
  expansion: null,
  breadcrumb: ["Work"],
  coverage_threshold: 0.2,
  active_filters: [],
  bar: {
    label: "http://x/Work",
    display_label: "Work",
    bar_type: "class",
    size: 3,
  },
  chart: workChart,
};

export const albumTable: TableJson = {
  columns: ["http://x/artist"],
  rows: [
    { subject: "http://x/a1", cells: { "http://x/artist": ["http://x/bob"] } },
    { subject: "http://x/a2", cells: { "http://x/artist": ["http://x/bob"] } },
  ],
  total: 2,
  sparql: "SELECT DISTINCT ?s WHERE { ?s a <http://x/Album> . }",
};
