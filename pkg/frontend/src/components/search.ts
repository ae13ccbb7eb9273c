/** Autocomplete class search box wired to the class-search endpoint. */

import type { ClassHit } from "../types.js";

export interface SearchHandlers {
  onQuery: (q: string) => void;
  onPick: (hit: ClassHit) => void;
}

export function renderSearchBox(handlers: SearchHandlers): HTMLElement {
  const root = document.createElement("div");
  root.className = "class-search";
  const input = document.createElement("input");
  input.className = "search-input";
  input.placeholder = "Search classes…";
  input.addEventListener("input", () => handlers.onQuery(input.value));
  const suggestions = document.createElement("ul");
  suggestions.className = "search-suggestions";
  root.append(input, suggestions);
  return root;
}

export function updateSuggestions(
  root: HTMLElement,
  hits: ClassHit[],
  onPick: (hit: ClassHit) => void,
): void {
  const list = root.querySelector(".search-suggestions")!;
  list.textContent = "";
  for (const hit of hits) {
    const item = document.createElement("li");
    item.className = "search-hit";
    item.dataset.uri = hit.uri;
    item.textContent = `${hit.label} (${hit.instance_count})`;
    item.addEventListener("click", () => onPick(hit));
    list.appendChild(item);
  }
}
