/** Thin typed client for the exploration HTTP API. No state, no aggregation. */

import type {
  ChartJson,
  ClassHit,
  CreateSessionResponse,
  ExpansionName,
  FilterSpec,
  PaneJson,
  SessionInfo,
  StreamSnapshot,
  TableJson,
} from "./types.js";

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
  }
}

export interface ChartParams {
  view?: string;
  threshold?: number;
  window_start?: number;
  window_len?: number;
  property?: string;
  direction?: string;
}

export interface TableRequest {
  columns: string[];
  filters?: FilterSpec[];
  limit?: number;
  offset?: number;
}

type Fetch = typeof fetch;

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: Fetch = (...args) => fetch(...args),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + path, init);
    const body = await response.json();
    if (!response.ok) {
      throw new ApiError(response.status, body?.error ?? response.statusText);
    }
    return body as T;
  }

  private post<T>(path: string, payload: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  createSession(options: {
    mode: "embedded" | "remote";
    source: string;
    root_class?: string;
    coverage_threshold?: number;
  }): Promise<CreateSessionResponse> {
    return this.post("/sessions", options);
  }

  getSession(sessionId: string): Promise<SessionInfo> {
    return this.request(`/sessions/${sessionId}`);
  }

  deleteSession(sessionId: string): Promise<{ deleted: string }> {
    return this.request(`/sessions/${sessionId}`, { method: "DELETE" });
  }

  expand(
    sessionId: string,
    body: {
      parent_pane: string;
      label: string;
      expansion: ExpansionName;
      filters?: FilterSpec[];
    },
  ): Promise<PaneJson> {
    return this.post(`/sessions/${sessionId}/expand`, body);
  }

  openClassPane(sessionId: string, classUri: string): Promise<PaneJson> {
    return this.post(`/sessions/${sessionId}/panes`, { class: classUri });
  }

  searchClasses(sessionId: string, q: string): Promise<{ classes: ClassHit[] }> {
    return this.request(
      `/sessions/${sessionId}/classes?q=${encodeURIComponent(q)}`,
    );
  }

  getChart(paneRef: string, params: ChartParams = {}): Promise<ChartJson> {
    const query = new URLSearchParams();
    for (const [key, value] of Object.entries(params)) {
      if (value !== undefined) query.set(key, String(value));
    }
    const suffix = query.toString() ? `?${query}` : "";
    return this.request(`/panes/${paneRef}/chart${suffix}`);
  }

  getTable(paneRef: string, body: TableRequest): Promise<TableJson> {
    return this.post(`/panes/${paneRef}/table`, body);
  }

  closePane(paneRef: string): Promise<{ closed: string }> {
    return this.request(`/panes/${paneRef}`, { method: "DELETE" });
  }

  barSparql(paneRef: string, label?: string): Promise<{ sparql: string }> {
    const query = new URLSearchParams({ pane_id: paneRef });
    if (label !== undefined) query.set("label", label);
    return this.request(`/bar-sparql?${query}`);
  }

  metrics(): Promise<Record<string, unknown>> {
    return this.request("/metrics");
  }

  /** Consume an NDJSON chart stream, invoking onSnapshot per partial result. */
  async streamChart(
    paneRef: string,
    view: string,
    onSnapshot: (snapshot: StreamSnapshot) => void,
    chunkSize?: number,
  ): Promise<void> {
    const query = new URLSearchParams({ view });
    if (chunkSize !== undefined) query.set("chunk_size", String(chunkSize));
    const response = await this.fetchImpl(
      `${this.baseUrl}/panes/${paneRef}/chart/stream?${query}`,
    );
    if (!response.ok || !response.body) {
      throw new ApiError(response.status, "chart stream unavailable");
    }
    const reader = response.body.getReader();
    const decoder = new TextDecoder();
    let buffered = "";
    const deliver = (line: string) => {
      if (!line.trim()) return;
      const parsed = JSON.parse(line);
      if (parsed.error) throw new ApiError(500, parsed.error);
      onSnapshot(parsed as StreamSnapshot);
    };
    for (;;) {
      const { done, value } = await reader.read();
      if (done) break;
      buffered += decoder.decode(value, { stream: true });
      let newline;
      while ((newline = buffered.indexOf("\n")) >= 0) {
        deliver(buffered.slice(0, newline));
        buffered = buffered.slice(newline + 1);
      }
    }
    deliver(buffered);
  }
}
