/** JSON payload shapes of the exploration HTTP API (snake_case, verbatim). */

export interface BarJson {
  label: string;
  display_label: string;
  bar_type: string;
  pseudo: boolean;
  instance_count: number;
  coverage: number;
  average_per_instance: number;
  direct_subclass_count: number;
  total_subclass_count: number;
}

export interface ChartJson {
  bars: BarJson[];
  total_bars: number;
  visible_bars: number;
  hidden_count: number;
  window_start: number;
  view?: string;
}

export interface FilterValueJson {
  type: "uri" | "literal";
  value: string;
  language?: string;
  datatype?: string;
}

export interface FilterJson {
  property: string;
  comparator: string;
  value: FilterValueJson;
}

export interface PaneBarJson {
  label: string;
  display_label: string;
  bar_type: string;
  size: number;
}

export interface PaneJson {
  id: string;
  session_id: string;
  parent_pane: string | null;
  selected_label: string | null;
  expansion: string | null;
  breadcrumb: string[];
  coverage_threshold: number;
  active_filters: FilterJson[];
  bar: PaneBarJson;
  chart: ChartJson;
}

export interface SessionStats {
  triple_count: number;
  class_count: number;
}

export interface CreateSessionResponse {
  session_id: string;
  stats: SessionStats;
  initial_pane: PaneJson;
}

export interface SessionInfo {
  session_id: string;
  stats: SessionStats;
  panes: PaneJson[];
}

export interface ClassHit {
  uri: string;
  label: string;
  instance_count: number;
}

export interface TableRowJson {
  subject: string;
  cells: Record<string, string[]>;
}

export interface TableJson {
  columns: string[];
  rows: TableRowJson[];
  total: number;
  sparql: string;
}

export interface StreamRow {
  label: string;
  count: number;
  occurrences?: number;
}

export interface StreamSnapshot {
  rows: StreamRow[];
  complete: boolean;
  fraction: number;
}

export type ExpansionName =
  | "subclass"
  | "prop_out"
  | "prop_in"
  | "object_out"
  | "object_in"
  | "filter";

export interface FilterSpec {
  property: string;
  comparator: string;
  value: FilterValueJson;
}
