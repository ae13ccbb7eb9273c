import { describe, expect, it } from "vitest";

import { RequestGate, SessionStore, initialViewState } from "../src/store.js";
import { workPane } from "./fixtures.js";

describe("RequestGate", () => {
  it("marks superseded tokens as stale", () => {
    const gate = new RequestGate();
    const first = gate.begin("chart:p0");
    const second = gate.begin("chart:p0");
    expect(gate.isCurrent("chart:p0", first)).toBe(false);
    expect(gate.isCurrent("chart:p0", second)).toBe(true);
  });

  it("tracks keys independently", () => {
    const gate = new RequestGate();
    const a = gate.begin("a");
    gate.begin("b");
    expect(gate.isCurrent("a", a)).toBe(true);
  });
});

describe("SessionStore", () => {
  it("keeps panes in creation order and drops closed ones", () => {
    const store = new SessionStore();
    store.reset("abc", { triple_count: 10, class_count: 1 });
    store.addPane(workPane);
    store.addPane({ ...workPane, id: "abc.p1" });
    expect(store.panes.map((p) => p.id)).toEqual(["abc.p0", "abc.p1"]);
    store.removePane("abc.p0");
    expect(store.panes.map((p) => p.id)).toEqual(["abc.p1"]);
    expect(() => store.view("abc.p0")).toThrow();
  });

  it("seeds the view state from the pane payload", () => {
    const view = initialViewState(workPane);
    expect(view.activeTab).toBe("subclasses");
    expect(view.threshold).toBe(workPane.coverage_threshold);
    expect(view.selectedProperties).toEqual([]);
  });
});
