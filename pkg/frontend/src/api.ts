/** Typed client for the embshift serving API.
 *
 * The UI never computes metrics itself: every displayed number comes out
 * of one of these calls, and each metrics response carries the server
 * sequence number it was computed at.
 */

export interface DatasetSummary {
  n: number;
  dim: number;
  cohorts: Record<string, number>;
  label_schema: Record<string, string[]>;
  has_confidence: boolean;
  seq: number;
}

export interface ProjectionPoint {
  id: string;
  x: number;
  y: number;
  cohort: string;
  labels: Record<string, string>;
  confidence: number | null;
}

export interface ProjectionResponse {
  name: string;
  final_kl: number | null;
  points: ProjectionPoint[];
  seq: number;
}

export interface AccuracyReport {
  point: number;
  ci: [number, number];
  n: number;
  b: number;
  seed: number;
}

export interface MetricsResponse {
  label_name: string;
  reference: string;
  accuracy: AccuracyReport;
  seq: number;
}

export interface ActionRecord {
  seq: number;
  ids: string[];
  label_name: string;
  value: string;
  author: string;
  timestamp: string;
  note: string | null;
}

export interface RelabelRequest {
  ids: string[];
  label_name: string;
  value: string;
  author: string;
  note?: string | null;
}

export interface RelabelResponse {
  action: ActionRecord;
  seq: number;
}

export interface FrechetResponse {
  ref: string;
  cohort: string;
  point: number;
  ci: [number, number];
  b: number;
  seed: number;
}

/** Server-reported failure; offendingIds carries unknown record ids. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
    readonly offendingIds: string[] = [],
  ) {
    super(`${status}: ${detail}`);
  }
}

async function parseError(resp: Response): Promise<never> {
  let detail = resp.statusText;
  let offending: string[] = [];
  try {
    const body = await resp.json();
    detail = body.detail ?? detail;
    offending = body.offending_ids ?? [];
  } catch {
    // non-JSON error body: keep the status text
  }
  throw new ApiError(resp.status, detail, offending);
}

export class Client {
  constructor(readonly base: string = "") {}

  private async get<T>(path: string, params?: Record<string, string>): Promise<T> {
    const qs = params ? `?${new URLSearchParams(params)}` : "";
    const resp = await fetch(`${this.base}${path}${qs}`);
    if (!resp.ok) await parseError(resp);
    return resp.json() as Promise<T>;
  }

  private async post<T>(path: string, body: unknown): Promise<T> {
    const resp = await fetch(`${this.base}${path}`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!resp.ok) await parseError(resp);
    return resp.json() as Promise<T>;
  }

  summary(): Promise<DatasetSummary> {
    return this.get("/api/dataset/summary");
  }

  projection(name = "main"): Promise<ProjectionResponse> {
    return this.get("/api/projection", { name });
  }

  records(ids: string[]): Promise<{ records: ProjectionPoint[] }> {
    return this.get("/api/records", { ids: ids.join(",") });
  }

  relabel(req: RelabelRequest): Promise<RelabelResponse> {
    return this.post("/api/selection/relabel", req);
  }

  accuracy(
    labelName: string,
    reference: string,
    b = 1000,
    seed = 0,
  ): Promise<MetricsResponse> {
    return this.get("/api/metrics/accuracy", {
      label_name: labelName,
      reference,
      b: String(b),
      seed: String(seed),
    });
  }

  frechet(ref: string, cohort: string, b = 1000, seed = 0): Promise<FrechetResponse> {
    return this.get("/api/frechet", {
      ref,
      cohort,
      b: String(b),
      seed: String(seed),
    });
  }

  actions(): Promise<{ actions: ActionRecord[]; seq: number }> {
    return this.get("/api/actions");
  }
}
