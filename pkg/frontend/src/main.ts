import { mount } from "./app.js";

const root = document.getElementById("app");
if (root) {
  const baseUrl =
    (root.dataset.apiBase || "").replace(/\/$/, "") || window.location.origin;
  mount(root, baseUrl);
}
