import type {
  ItemPayload,
  ItemsPage,
  MethodInfo,
  QueryResponse,
  ResultEntry,
} from "../src/types.js";

export function item(id: string, category = "chair"): ItemPayload {
  return {
    id,
    category,
    name: `name ${id}`,
    description: `desc ${id}`,
    image_url: null,
    set_ids: [],
    has_features: true,
  };
}

export function resultEntry(
  id: string,
  provenance: Record<string, number> = { visual: 1 },
  score = 0.5,
): ResultEntry {
  return {
    id,
    category: "chair",
    name: `name ${id}`,
    description: `desc ${id}`,
    score,
    provenance,
  };
}

export function queryResponse(
  ids: string[],
  over: Partial<QueryResponse> = {},
): QueryResponse {
  return {
    method: "early",
    k: ids.length,
    item_id: "p1",
    text: "wool",
    warnings: [],
    timing_ms: 1.5,
    results: ids.map((id, i) => resultEntry(id, { visual: i + 1 })),
    ...over,
  };
}

export const METHODS: MethodInfo[] = [
  { name: "late", ready: true },
  { name: "early", ready: true },
  { name: "deepstyle", ready: false },
  { name: "siamese", ready: true },
  { name: "random", ready: true },
];

export function itemsPage(items: ItemPayload[], over: Partial<ItemsPage> = {}): ItemsPage {
  return {
    items,
    total: items.length,
    page: 1,
    pages: 1,
    page_size: 24,
    categories: ["chair", "sofa"],
    ...over,
  };
}

export function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

export interface Deferred<T> {
  promise: Promise<T>;
  resolve: (value: T) => void;
}

export function deferred<T>(): Deferred<T> {
  let resolve!: (value: T) => void;
  const promise = new Promise<T>((r) => {
    resolve = r;
  });
  return { promise, resolve };
}

export interface RecordedCall {
  url: string;
  init?: RequestInit;
}

/** Stub service: canned catalog pages plus a programmable query endpoint. */
export class FakeService {
  calls: RecordedCall[] = [];
  private queryQueue: Array<Response | Promise<Response>> = [];

  constructor(
    private readonly catalog: ItemPayload[],
    private readonly methods: MethodInfo[] = METHODS,
  ) {}

  /** Next /api/query replies, in order; a Promise delays until resolved. */
  enqueueQuery(...replies: Array<Response | Promise<Response>>): void {
    this.queryQueue.push(...replies);
  }

  queryBodies(): Array<Record<string, unknown>> {
    return this.calls
      .filter((c) => c.url.endsWith("/api/query"))
      .map((c) => JSON.parse(String(c.init?.body)));
  }

  fetch = (url: string, init?: RequestInit): Promise<Response> => {
    this.calls.push({ url, init });
    if (url.includes("/api/methods")) {
      return Promise.resolve(jsonResponse({ methods: this.methods }));
    }
    if (url.includes("/api/items?")) {
      const params = new URLSearchParams(url.split("?")[1]);
      const category = params.get("category");
      const pageSize = Number(params.get("page_size"));
      const page = Number(params.get("page"));
      const matching = category
        ? this.catalog.filter((i) => i.category === category)
        : this.catalog;
      const pages = Math.max(1, Math.ceil(matching.length / pageSize));
      const start = (page - 1) * pageSize;
      return Promise.resolve(
        jsonResponse(
          itemsPage(matching.slice(start, start + pageSize), {
            total: matching.length,
            page,
            pages,
            page_size: pageSize,
          }),
        ),
      );
    }
    if (url.endsWith("/api/query")) {
      const reply = this.queryQueue.shift();
      if (!reply) throw new Error("no canned reply for /api/query");
      return Promise.resolve(reply);
    }
    throw new Error(`unexpected request ${url}`);
  };
}

export const tick = (): Promise<void> => new Promise((r) => setTimeout(r, 0));
