import type {
  ItemPayload,
  ItemsPage,
  MethodInfo,
  QueryRequest,
  QueryResponse,
} from "./types.js";

/** A 4xx/5xx reply; carries the service's own code and message. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

/** The service could not be reached at all (network level). */
export class ServiceUnreachableError extends Error {
  constructor() {
    super("service unreachable");
    this.name = "ServiceUnreachableError";
  }
}

type FetchFn = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl = "",
    private readonly fetchFn: FetchFn = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let resp: Response;
    try {
      resp = await this.fetchFn(this.baseUrl + path, init);
    } catch {
      throw new ServiceUnreachableError();
    }
    const body = await resp.json().catch(() => null);
    if (!resp.ok) {
      const err = (body as { error?: { code?: string; message?: string } } | null)?.error;
      throw new ApiError(resp.status, err?.code ?? "error", err?.message ?? `HTTP ${resp.status}`);
    }
    return body as T;
  }

  methods(): Promise<{ methods: MethodInfo[] }> {
    return this.request("/api/methods");
  }

  items(page: number, pageSize: number, category: string | null): Promise<ItemsPage> {
    const params = new URLSearchParams({ page: String(page), page_size: String(pageSize) });
    if (category) params.set("category", category);
    return this.request(`/api/items?${params}`);
  }

  item(id: string): Promise<ItemPayload> {
    return this.request(`/api/items/${encodeURIComponent(id)}`);
  }

  query(req: QueryRequest): Promise<QueryResponse> {
    return this.request("/api/query", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(req),
    });
  }
}
