/** Breadcrumb trail: server-provided path, one consistent color per path. */

export function pathColor(trail: string[]): string {
  let hash = 0;
  for (const char of trail.join("→")) {
    hash = (hash * 31 + char.charCodeAt(0)) >>> 0;
  }
  return `hsl(${hash % 360}, 55%, 72%)`;
}

export function renderBreadcrumbs(
  trail: string[],
  display: (label: string) => string = (label) => label,
): HTMLElement {
  const root = document.createElement("nav");
  root.className = "breadcrumbs";
  root.style.backgroundColor = pathColor(trail);
  trail.forEach((label, index) => {
    if (index > 0) {
      const separator = document.createElement("span");
      separator.className = "crumb-separator";
      separator.textContent = " › ";
      root.appendChild(separator);
    }
    const crumb = document.createElement("span");
    crumb.className = "crumb";
    crumb.dataset.label = label;
    crumb.textContent = display(label);
    root.appendChild(crumb);
  });
  return root;
}
