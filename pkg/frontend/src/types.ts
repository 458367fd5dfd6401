export interface ItemPayload {
  id: string;
  category: string;
  name: string;
  description: string;
  image_url: string | null;
  set_ids: string[];
  has_features: boolean;
}

export interface ItemsPage {
  items: ItemPayload[];
  total: number;
  page: number;
  pages: number;
  page_size: number;
  categories: string[];
}

export interface MethodInfo {
  name: string;
  ready: boolean;
}

export interface ResultEntry {
  id: string;
  category: string;
  name: string;
  description: string;
  score: number;
  provenance: Record<string, number>;
}

export interface QueryResponse {
  method: string;
  k: number;
  item_id: string | null;
  text: string;
  warnings: string[];
  timing_ms: number;
  results: ResultEntry[];
}

export interface QueryRequest {
  item_id: string;
  text: string;
  method: string;
  k: number;
}

export interface QueryDraft {
  itemId: string | null;
  text: string;
  method: string;
  k: number;
}
