import { ApiClient, ApiError, ServiceUnreachableError } from "./api.js";
import type {
  ItemPayload,
  MethodInfo,
  QueryDraft,
  QueryResponse,
} from "./types.js";

export interface AppState {
  items: ItemPayload[];
  page: number;
  pages: number;
  category: string | null;
  categories: string[];
  methods: MethodInfo[];
  selected: ItemPayload | null;
  draft: QueryDraft;
  results: QueryResponse | null;
  history: QueryResponse[];
  pending: boolean;
  error: string | null;
  banner: string | null;
}

export const PAGE_SIZE = 24;

type Listener = (state: AppState) => void;

/** Client-side state; the service stays the single source of result order. */
export class Store {
  private state: AppState = {
    items: [],
    page: 1,
    pages: 1,
    category: null,
    categories: [],
    methods: [],
    selected: null,
    draft: { itemId: null, text: "", method: "early", k: 4 },
    results: null,
    history: [],
    pending: false,
    error: null,
    banner: null,
  };

  // submissions are numbered; a reply only lands if it is still the latest
  private submitSeq = 0;
  private listeners: Listener[] = [];

  constructor(private readonly api: ApiClient) {}

  getState(): AppState {
    return this.state;
  }

  subscribe(fn: Listener): void {
    this.listeners.push(fn);
  }

  private patch(partial: Partial<AppState>): void {
    this.state = { ...this.state, ...partial };
    for (const fn of this.listeners) fn(this.state);
  }

  private fail(err: unknown): void {
    if (err instanceof ServiceUnreachableError) {
      this.patch({ banner: err.message, pending: false });
    } else if (err instanceof ApiError) {
      this.patch({ error: err.message, pending: false });
    } else {
      throw err;
    }
  }

  async init(): Promise<void> {
    try {
      const { methods } = await this.api.methods();
      this.patch({ methods, banner: null });
    } catch (err) {
      this.fail(err);
      return;
    }
    await this.loadPage(1);
  }

  async loadPage(page: number): Promise<void> {
    try {
      const data = await this.api.items(page, PAGE_SIZE, this.state.category);
      this.patch({
        items: data.items,
        page: data.page,
        pages: data.pages,
        categories: data.categories,
        banner: null,
      });
    } catch (err) {
      this.fail(err);
    }
  }

  async nextPage(): Promise<void> {
    if (this.state.page < this.state.pages) await this.loadPage(this.state.page + 1);
  }

  async prevPage(): Promise<void> {
    if (this.state.page > 1) await this.loadPage(this.state.page - 1);
  }

  async setCategory(category: string | null): Promise<void> {
    this.patch({ category });
    await this.loadPage(1);
  }

  select(item: ItemPayload): void {
    this.patch({
      selected: item,
      draft: { ...this.state.draft, itemId: item.id },
    });
  }

  setText(text: string): void {
    // silent: keystrokes must not trigger a re-render that steals focus
    this.state.draft.text = text;
  }

  setMethod(method: string): void {
    this.patch({ draft: { ...this.state.draft, method } });
  }

  setK(k: number): void {
    this.patch({ draft: { ...this.state.draft, k } });
  }

  /** Submit the current draft; edits to the text keep the selected item. */
  async submit(): Promise<void> {
    const { itemId, text, method, k } = this.state.draft;
    if (itemId === null) return;
    const seq = ++this.submitSeq;
    this.patch({ pending: true, error: null });
    let response: QueryResponse;
    try {
      response = await this.api.query({ item_id: itemId, text, method, k });
    } catch (err) {
      if (seq !== this.submitSeq) return; // superseded; drop silently
      this.fail(err);
      return;
    }
    if (seq !== this.submitSeq) return; // a newer submission already landed
    const history = this.state.results
      ? [this.state.results, ...this.state.history]
      : this.state.history;
    this.patch({ results: response, history, pending: false, banner: null });
  }
}
