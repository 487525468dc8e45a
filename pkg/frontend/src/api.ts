/** Typed client for the commlens HTTP backend.
 *
 * Thin-client rule: every number the UI displays comes from one of these
 * responses; nothing is recomputed locally.
 */

import type { ViewName } from "./views.js";

export interface ParticipantInfo {
  id: string;
  displayName: string;
}

export interface LevelInfo {
  levelId: string;
  hasView: boolean;
  hasProperties: boolean;
  featureNames: string[];
}

export interface CorpusSummary {
  participantCount: number;
  messageCount: number;
  timeExtent: [number, number] | null;
  participants: ParticipantInfo[];
  levels: LevelInfo[];
}

export interface Histogram {
  edges: number[];
  counts: number[];
}

export interface EpisodeStrip {
  episodeId: string;
  start: number;
  end: number;
  messageCount: number;
  fadeFactor: number;
}

export interface MatrixCell {
  row: string;
  col: string;
  count: number;
  normalizedCount: number;
  histogram?: Histogram;
  episodes?: EpisodeStrip[];
}

export interface MatrixResponse {
  view: ViewName;
  rowOrder: string[];
  colOrder: string[];
  node: number;
  cells: MatrixCell[];
}

export interface CellMessage {
  id: string;
  sender: string;
  receiver: string;
  timestamp: number;
  content: string;
}

export interface CellDetails {
  histogram: Histogram;
  entityTallies: Record<string, number>;
  messageTotal: number;
  messages: CellMessage[];
}

export interface TranscriptRecord {
  id: string;
  sender: string;
  timestamp: number;
  content: string;
  senderSide: "left" | "right";
}

export interface EpisodeTranscript {
  episodeId: string;
  pair: [string, string];
  records: TranscriptRecord[];
}

export interface LevelStatePayload {
  levelId: string;
  enabled: boolean;
  params: Record<string, unknown>;
}

export interface LabelResponse {
  modelTrained: boolean;
  fadeFactors: Record<string, number>;
}

export interface ProvenanceNodeInfo {
  nodeId: number;
  parent: number | null;
  starred: boolean;
  note: string;
}

export interface ProvenanceGraph {
  currentId: number;
  nodes: ProvenanceNodeInfo[];
}

export type QueryParseResult =
  | { ok: true; canonical: string }
  | { ok: false; error: string; position: number };

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

export class CommlensClient {
  constructor(
    private baseUrl: string,
    private fetchImpl: FetchLike = (...args) => fetch(...args),
  ) {}

  private async get<T>(path: string, params?: Record<string, string | number>): Promise<T> {
    let url = this.baseUrl + path;
    if (params) {
      const q = new URLSearchParams();
      for (const [k, v] of Object.entries(params)) q.set(k, String(v));
      url += "?" + q.toString();
    }
    const res = await this.fetchImpl(url);
    if (!res.ok) throw new ApiError(res.status, await res.text());
    return (await res.json()) as T;
  }

  private async post<T>(path: string, body: unknown): Promise<T> {
    const res = await this.fetchImpl(this.baseUrl + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!res.ok) throw new ApiError(res.status, await res.text());
    return (await res.json()) as T;
  }

  corpusSummary(): Promise<CorpusSummary> {
    return this.get("/corpus/summary");
  }

  matrix(node: number, view: ViewName, orders?: { rowOrder?: string; colOrder?: string }): Promise<MatrixResponse> {
    return this.get("/matrix", { node, view, ...orders });
  }

  cellDetails(row: string, col: string, node: number, limit = 50, offset = 0): Promise<CellDetails> {
    return this.get(`/cell/${encodeURIComponent(row)}/${encodeURIComponent(col)}`, { node, limit, offset });
  }

  episode(episodeId: string): Promise<EpisodeTranscript> {
    return this.get(`/episode/${encodeURIComponent(episodeId)}`);
  }

  commitFilters(levels: LevelStatePayload[]): Promise<{ nodeId: number }> {
    return this.post("/filters", { levels });
  }

  labelEpisode(episodeId: string, label: "relevant" | "irrelevant"): Promise<LabelResponse> {
    return this.post(`/episode/${encodeURIComponent(episodeId)}/label`, { label });
  }

  ambiguous(k: number): Promise<{ targets: string[] }> {
    return this.get("/ambiguous", { k });
  }

  navigate(nodeId: number): Promise<{ nodeId: number }> {
    return this.post("/provenance/navigate", { nodeId });
  }

  star(nodeId: number): Promise<unknown> {
    return this.post("/provenance/star", { nodeId });
  }

  setNote(nodeId: number, note: string): Promise<unknown> {
    return this.post("/provenance/note", { nodeId, note });
  }

  provenanceGraph(): Promise<ProvenanceGraph> {
    return this.get("/provenance/graph");
  }

  async reportMarkdown(): Promise<string> {
    const res = await this.fetchImpl(this.baseUrl + "/report");
    if (!res.ok) throw new ApiError(res.status, await res.text());
    return res.text();
  }

  parseQuery(q: string): Promise<QueryParseResult> {
    return this.post("/query/parse", { q });
  }
}
