import type { AppState } from "./store.js";
import type { ItemPayload, QueryResponse, ResultEntry } from "./types.js";

type Attrs = Record<string, string | boolean | ((e: Event) => void) | null>;

function el(
  tag: string,
  attrs: Attrs = {},
  ...children: Array<string | Node | null>
): HTMLElement {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) {
    if (v == null || v === false) continue;
    if (k.startsWith("on") && typeof v === "function") {
      node.addEventListener(k.slice(2).toLowerCase(), v as EventListener);
    } else if (v === true) {
      node.setAttribute(k, "");
    } else if (typeof v === "string") {
      node.setAttribute(k, v);
    }
  }
  for (const c of children) {
    if (typeof c === "string") node.appendChild(document.createTextNode(c));
    else if (c) node.appendChild(c);
  }
  return node;
}

export interface Actions {
  select(item: ItemPayload): void;
  setCategory(category: string | null): void;
  nextPage(): void;
  prevPage(): void;
  setText(text: string): void;
  setMethod(method: string): void;
  setK(k: number): void;
  submit(): void;
  retry(): void;
}

function banner(state: AppState, actions: Actions): HTMLElement | null {
  if (!state.banner) return null;
  return el(
    "div",
    { class: "banner", role: "alert" },
    state.banner,
    el("button", { class: "retry", onClick: () => actions.retry() }, "retry"),
  );
}

function catalogPanel(state: AppState, actions: Actions): HTMLElement {
  const options = [
    el("option", { value: "" }, "all categories"),
    ...state.categories.map((c) =>
      el("option", { value: c, selected: state.category === c }, c),
    ),
  ];
  const cards = state.items.map((item) =>
    el(
      "button",
      {
        class: "card" + (state.selected?.id === item.id ? " selected" : ""),
        "data-item-id": item.id,
        onClick: () => actions.select(item),
      },
      el("strong", {}, item.name),
      el("span", { class: "cat" }, item.category),
      el("small", {}, item.description),
    ),
  );
  return el(
    "section",
    { class: "catalog" },
    el("h2", {}, "Catalog"),
    el("select", {
      class: "category-filter",
      onChange: (e) =>
        actions.setCategory((e.target as HTMLSelectElement).value || null),
    }, ...options),
    el("div", { class: "grid" }, ...cards),
    el(
      "nav",
      { class: "pager" },
      el(
        "button",
        { class: "prev", disabled: state.page <= 1, onClick: () => actions.prevPage() },
        "prev",
      ),
      el("span", {}, `page ${state.page} / ${state.pages}`),
      el(
        "button",
        { class: "next", disabled: state.page >= state.pages, onClick: () => actions.nextPage() },
        "next",
      ),
    ),
  );
}

function draftPanel(state: AppState, actions: Actions): HTMLElement {
  const selected = state.selected
    ? el(
        "div",
        { class: "selected-item" },
        el("strong", {}, state.selected.name),
        el("small", {}, state.selected.description),
      )
    : el("div", { class: "selected-item empty" }, "pick an item from the catalog");
  const methodOptions = state.methods.map((m) =>
    el(
      "option",
      { value: m.name, disabled: !m.ready, selected: state.draft.method === m.name },
      m.ready ? m.name : `${m.name} (unavailable)`,
    ),
  );
  return el(
    "section",
    { class: "draft" },
    el("h2", {}, "Query"),
    selected,
    el("input", {
      class: "text-input",
      type: "text",
      placeholder: "describe the style you want",
      value: state.draft.text,
      onInput: (e) => actions.setText((e.target as HTMLInputElement).value),
    }),
    el("select", {
      class: "method-select",
      onChange: (e) => actions.setMethod((e.target as HTMLSelectElement).value),
    }, ...methodOptions),
    el("input", {
      class: "k-input",
      type: "number",
      min: "1",
      max: "50",
      value: String(state.draft.k),
      onChange: (e) => actions.setK(Number((e.target as HTMLInputElement).value)),
    }),
    el(
      "button",
      {
        // resubmits while pending are allowed; they supersede the in-flight query
        class: "submit",
        disabled: state.selected === null,
        onClick: () => actions.submit(),
      },
      state.pending ? "searching..." : "search",
    ),
    state.error ? el("div", { class: "error", role: "alert" }, state.error) : null,
  );
}

function provenanceBadges(entry: ResultEntry): HTMLElement {
  const badges = Object.entries(entry.provenance).map(([stage, rank]) =>
    el("span", { class: `badge badge-${stage}` }, `${stage} #${rank}`),
  );
  return el("span", { class: "badges" }, ...badges);
}

function resultCard(entry: ResultEntry): HTMLElement {
  return el(
    "li",
    { class: "result", "data-item-id": entry.id },
    el("strong", {}, entry.name),
    el("span", { class: "cat" }, entry.category),
    el("span", { class: "score" }, entry.score.toFixed(4)),
    provenanceBadges(entry),
  );
}

function resultsPanel(state: AppState): HTMLElement {
  if (!state.results) {
    return el("section", { class: "results" }, el("h2", {}, "Results"));
  }
  const r = state.results;
  // rendered order is the response order, untouched
  return el(
    "section",
    { class: "results" },
    el("h2", {}, "Results"),
    el("p", { class: "query-echo" }, `${r.method} k=${r.k} "${r.text}" on ${r.item_id}`),
    ...r.warnings.map((w) => el("p", { class: "warning" }, w)),
    el("ol", { class: "result-list" }, ...r.results.map(resultCard)),
  );
}

function historyEntry(response: QueryResponse): HTMLElement {
  return el(
    "li",
    { class: "history-entry" },
    el("span", { class: "hdr" }, `${response.method} k=${response.k} "${response.text}"`),
    el("span", { class: "ids" }, response.results.map((e) => e.id).join(", ")),
  );
}

function historyStrip(state: AppState): HTMLElement | null {
  if (state.history.length === 0) return null;
  return el(
    "section",
    { class: "history" },
    el("h2", {}, "Previous queries"),
    el("ul", {}, ...state.history.map(historyEntry)),
  );
}

export function renderApp(root: HTMLElement, state: AppState, actions: Actions): void {
  root.replaceChildren(
    ...[
      banner(state, actions),
      catalogPanel(state, actions),
      draftPanel(state, actions),
      resultsPanel(state),
      historyStrip(state),
    ].filter((n): n is HTMLElement => n !== null),
  );
}
