/** Instance table: per-column filter inputs, SPARQL panel, filter expansion. */

import type { TableJson } from "../types.js";

export interface TableHandlers {
  onFilterChange?: (column: string, value: string) => void;
  onOpenFilteredPane?: () => void;
  onCopySparql?: (text: string) => void;
}

export function renderTable(
  table: TableJson,
  filters: Record<string, string>,
  handlers: TableHandlers = {},
): HTMLElement {
  const root = document.createElement("div");
  root.className = "instance-table";

  const element = document.createElement("table");
  const head = document.createElement("thead");
  const headerRow = document.createElement("tr");
  const filterRow = document.createElement("tr");
  filterRow.className = "filter-row";
  for (const column of ["subject", ...table.columns]) {
    const th = document.createElement("th");
    th.textContent = column;
    headerRow.appendChild(th);
    const cell = document.createElement("th");
    if (column !== "subject") {
      const input = document.createElement("input");
      input.className = "column-filter";
      input.dataset.column = column;
      input.value = filters[column] ?? "";
      input.placeholder = "filter…";
      input.addEventListener("change", () =>
        handlers.onFilterChange?.(column, input.value),
      );
      cell.appendChild(input);
    }
    filterRow.appendChild(cell);
  }
  head.append(headerRow, filterRow);
  element.appendChild(head);

  const body = document.createElement("tbody");
  for (const row of table.rows) {
    const tr = document.createElement("tr");
    const subject = document.createElement("td");
    subject.textContent = row.subject;
    tr.appendChild(subject);
    for (const column of table.columns) {
      const td = document.createElement("td");
      td.textContent = (row.cells[column] ?? []).join("; ");
      tr.appendChild(td);
    }
    body.appendChild(tr);
  }
  element.appendChild(body);
  root.appendChild(element);

  const total = document.createElement("div");
  total.className = "table-total";
  total.textContent = `${table.total} instances`;
  root.appendChild(total);

  const actions = document.createElement("div");
  actions.className = "table-actions";
  const openFiltered = document.createElement("button");
  openFiltered.className = "open-filtered";
  openFiltered.textContent = "Open filtered pane";
  openFiltered.addEventListener("click", () => handlers.onOpenFilteredPane?.());
  actions.appendChild(openFiltered);
  root.appendChild(actions);

  const sparqlPanel = document.createElement("div");
  sparqlPanel.className = "sparql-panel";
  const sparql = document.createElement("pre");
  sparql.className = "sparql-text";
  sparql.textContent = table.sparql;
  const copy = document.createElement("button");
  copy.className = "copy-sparql";
  copy.textContent = "Copy";
  copy.addEventListener("click", () => {
    navigator.clipboard?.writeText(table.sparql);
    handlers.onCopySparql?.(table.sparql);
  });
  sparqlPanel.append(copy, sparql);
  root.appendChild(sparqlPanel);
  return root;
}
