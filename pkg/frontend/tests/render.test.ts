// @vitest-environment happy-dom
import { describe, expect, it } from "vitest";

import { renderApp, type Actions } from "../src/render.js";
import type { AppState } from "../src/store.js";
import { METHODS, item, queryResponse } from "./helpers.js";

const noop: Actions = {
  select: () => {},
  setCategory: () => {},
  nextPage: () => {},
  prevPage: () => {},
  setText: () => {},
  setMethod: () => {},
  setK: () => {},
  submit: () => {},
  retry: () => {},
};

function stateOf(over: Partial<AppState> = {}): AppState {
  return {
    items: [item("p1"), item("p2")],
    page: 1,
    pages: 1,
    category: null,
    categories: ["chair", "sofa"],
    methods: METHODS,
    selected: null,
    draft: { itemId: null, text: "", method: "early", k: 4 },
    results: null,
    history: [],
    pending: false,
    error: null,
    banner: null,
    ...over,
  };
}

function render(state: AppState): HTMLElement {
  const root = document.createElement("div");
  renderApp(root, state, noop);
  return root;
}

describe("renderApp", () => {
  it("disables submit until an item is selected", () => {
    const off = render(stateOf());
    expect((off.querySelector(".submit") as HTMLButtonElement).hasAttribute("disabled")).toBe(true);
    const picked = item("p1");
    const on = render(
      stateOf({ selected: picked, draft: { itemId: "p1", text: "", method: "early", k: 4 } }),
    );
    expect((on.querySelector(".submit") as HTMLButtonElement).hasAttribute("disabled")).toBe(false);
    expect((on.querySelector(".selected-item") as HTMLElement).textContent).toContain("name p1");
  });

  it("disables the pager at both bounds", () => {
    const first = render(stateOf({ page: 1, pages: 3 }));
    expect((first.querySelector(".prev") as HTMLButtonElement).hasAttribute("disabled")).toBe(true);
    expect((first.querySelector(".next") as HTMLButtonElement).hasAttribute("disabled")).toBe(false);
    const last = render(stateOf({ page: 3, pages: 3 }));
    expect((last.querySelector(".prev") as HTMLButtonElement).hasAttribute("disabled")).toBe(false);
    expect((last.querySelector(".next") as HTMLButtonElement).hasAttribute("disabled")).toBe(true);
  });

  it("renders the category filter options", () => {
    const root = render(stateOf({ category: "sofa" }));
    const options = [...root.querySelectorAll(".category-filter option")];
    expect(options.map((o) => o.getAttribute("value"))).toEqual(["", "chair", "sofa"]);
    expect(options[2].hasAttribute("selected")).toBe(true);
  });

  it("marks unavailable methods in the picker", () => {
    const root = render(stateOf());
    const options = [...root.querySelectorAll(".method-select option")];
    const deepstyle = options.find((o) => o.getAttribute("value") === "deepstyle")!;
    expect(deepstyle.hasAttribute("disabled")).toBe(true);
    expect(deepstyle.textContent).toContain("unavailable");
  });

  it("keeps results in response order with provenance badges", () => {
    const response = queryResponse(["p9", "p2", "p5"]);
    response.results[0].score = 0.99; // unsorted on purpose
    response.results[1].provenance = { visual: 2, text: 1 };
    const root = render(stateOf({ results: response }));
    const ids = [...root.querySelectorAll(".result")].map((n) =>
      n.getAttribute("data-item-id"),
    );
    expect(ids).toEqual(["p9", "p2", "p5"]);
    const badges = [...root.querySelectorAll(".result")][1]
      .querySelectorAll(".badge");
    expect([...badges].map((b) => b.textContent)).toEqual(["visual #2", "text #1"]);
  });

  it("renders warnings from the response", () => {
    const response = queryResponse(["p1"], {
      warnings: ["text query has no in-vocabulary word; text stage skipped"],
    });
    const root = render(stateOf({ results: response }));
    expect((root.querySelector(".warning") as HTMLElement).textContent).toContain(
      "no in-vocabulary word",
    );
  });

  it("shows the history strip only when something is in it", () => {
    expect(render(stateOf()).querySelector(".history")).toBeNull();
    const root = render(
      stateOf({ history: [queryResponse(["p1", "p2"], { method: "late" })] }),
    );
    const entry = root.querySelector(".history-entry") as HTMLElement;
    expect(entry.textContent).toContain("late");
    expect(entry.textContent).toContain("p1, p2");
  });

  it("shows the unreachable banner with a retry control", () => {
    const root = render(stateOf({ banner: "service unreachable" }));
    expect((root.querySelector(".banner") as HTMLElement).textContent).toContain(
      "service unreachable",
    );
    expect(root.querySelector(".banner .retry")).not.toBeNull();
  });
});
