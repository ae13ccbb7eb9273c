import { describe, expect, it, vi } from "vitest";

import { renderTable } from "../src/components/table.js";
import { albumTable } from "./fixtures.js";

describe("renderTable", () => {
  it("renders rows, multi-valued cells and the payload total", () => {
    const root = renderTable(albumTable, {});
    const rows = [...root.querySelectorAll("tbody tr")];
    expect(rows.length).toBe(2);
    expect(rows[0].querySelectorAll("td")[0].textContent).toBe("http://x/a1");
    expect(rows[0].querySelectorAll("td")[1].textContent).toBe("http://x/bob");
    expect(root.querySelector(".table-total")!.textContent).toBe("2 instances");
  });

  it("re-queries on filter input change", () => {
    const onFilterChange = vi.fn();
    const root = renderTable(albumTable, {}, { onFilterChange });
    const input = root.querySelector(".column-filter") as HTMLInputElement;
    input.value = "http://x/bob";
    input.dispatchEvent(new Event("change"));
    expect(onFilterChange).toHaveBeenCalledWith(
      "http://x/artist",
      "http://x/bob",
    );
  });

  it("shows the SPARQL text verbatim and copies it", () => {
    const writeText = vi.fn();
    Object.defineProperty(navigator, "clipboard", {
      value: { writeText },
      configurable: true,
    });
    const onCopySparql = vi.fn();
    const root = renderTable(albumTable, {}, { onCopySparql });
    expect(root.querySelector(".sparql-text")!.textContent).toBe(
      albumTable.sparql,
    );
    (root.querySelector(".copy-sparql") as HTMLButtonElement).click();
    expect(writeText).toHaveBeenCalledWith(albumTable.sparql);
    expect(onCopySparql).toHaveBeenCalledWith(albumTable.sparql);
  });

  it("offers a filter-expansion button", () => {
    const onOpenFilteredPane = vi.fn();
    const root = renderTable(albumTable, {}, { onOpenFilteredPane });
    (root.querySelector(".open-filtered") as HTMLButtonElement).click();
    expect(onOpenFilteredPane).toHaveBeenCalledOnce();
  });
});
