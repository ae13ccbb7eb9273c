/** Bar chart renderer: bars in payload order, hover pop-ups, windowing pager.
 *
 * Every number shown comes straight from the chart JSON; bar heights are pure
 * layout (scaled against the tallest bar in the window).
 */

import type { BarJson, ChartJson } from "../types.js";

export interface ChartHandlers {
  onBarClick?: (bar: BarJson) => void;
  onWindow?: (windowStart: number) => void;
  /** Marks bars to draw as selected (Properties tab multi-select). */
  isSelected?: (bar: BarJson) => boolean;
}

function popupText(bar: BarJson): string {
  const lines = [bar.display_label];
  if (bar.bar_type === "property") {
    lines.push(
      `coverage ${(bar.coverage * 100).toFixed(1)}%`,
      `avg per instance ${bar.average_per_instance}`,
    );
  } else {
    lines.push(
      `${bar.instance_count} instances, ${bar.direct_subclass_count} subclasses`,
    );
  }
  return lines.join("\n");
}

export function renderChart(
  chart: ChartJson,
  handlers: ChartHandlers = {},
): HTMLElement {
  const root = document.createElement("div");
  root.className = "chart";

  const columns = document.createElement("div");
  columns.className = "chart-columns";
  const max = Math.max(1, ...chart.bars.map((b) => b.instance_count));
  for (const bar of chart.bars) {
    const column = document.createElement("div");
    column.className = "bar-column";
    column.dataset.label = bar.label;
    if (bar.pseudo) column.classList.add("pseudo");
    if (handlers.isSelected?.(bar)) column.classList.add("selected");

    const fill = document.createElement("div");
    fill.className = "bar-fill";
    fill.style.height = `${(bar.instance_count / max) * 100}%`;
    if (bar.instance_count === 0) column.classList.add("empty");

    const count = document.createElement("span");
    count.className = "bar-count";
    count.textContent = String(bar.instance_count);

    const caption = document.createElement("span");
    caption.className = "bar-caption";
    caption.textContent = bar.display_label;

    const popup = document.createElement("div");
    popup.className = "bar-popup";
    popup.hidden = true;
    popup.textContent = popupText(bar);
    column.addEventListener("mouseenter", () => (popup.hidden = false));
    column.addEventListener("mouseleave", () => (popup.hidden = true));
    if (handlers.onBarClick && !bar.pseudo) {
      column.classList.add("clickable");
      column.addEventListener("click", () => handlers.onBarClick!(bar));
    }

    column.append(count, fill, caption, popup);
    columns.appendChild(column);
  }
  root.appendChild(columns);

  const summary = document.createElement("div");
  summary.className = "chart-summary";
  summary.textContent =
    `${chart.visible_bars} of ${chart.total_bars} bars` +
    (chart.hidden_count ? ` (${chart.hidden_count} below threshold)` : "");
  root.appendChild(summary);

  if (handlers.onWindow && chart.visible_bars > chart.bars.length) {
    const pager = document.createElement("div");
    pager.className = "chart-pager";
    const prev = document.createElement("button");
    prev.textContent = "◀";
    prev.disabled = chart.window_start === 0;
    prev.addEventListener("click", () =>
      handlers.onWindow!(Math.max(0, chart.window_start - chart.bars.length)),
    );
    const next = document.createElement("button");
    next.textContent = "▶";
    next.disabled =
      chart.window_start + chart.bars.length >= chart.visible_bars;
    next.addEventListener("click", () =>
      handlers.onWindow!(chart.window_start + chart.bars.length),
    );
    pager.append(prev, next);
    root.appendChild(pager);
  }
  return root;
}
