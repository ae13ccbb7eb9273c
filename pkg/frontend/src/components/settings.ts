/** Settings form: dataset or endpoint choice plus optional root class. */

export interface SettingsValues {
  mode: "embedded" | "remote";
  source: string;
  root_class?: string;
}

export function renderSettings(
  onCreate: (values: SettingsValues) => void,
): HTMLElement {
  const form = document.createElement("form");
  form.className = "settings";

  const mode = document.createElement("select");
  mode.className = "settings-mode";
  for (const value of ["embedded", "remote"]) {
    const option = document.createElement("option");
    option.value = value;
    option.textContent = value === "embedded" ? "Dataset file" : "SPARQL endpoint";
    mode.appendChild(option);
  }

  const source = document.createElement("input");
  source.className = "settings-source";
  source.placeholder = "dataset path or endpoint URL";

  const rootClass = document.createElement("input");
  rootClass.className = "settings-root";
  rootClass.placeholder = "root class URI (optional)";

  const submit = document.createElement("button");
  submit.type = "submit";
  submit.textContent = "Explore";

  form.append(mode, source, rootClass, submit);
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    onCreate({
      mode: mode.value as SettingsValues["mode"],
      source: source.value,
      root_class: rootClass.value || undefined,
    });
  });
  return form;
}
