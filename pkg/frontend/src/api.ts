/**
 * Thin typed client over the platform API.
 *
 * The UI never computes on what it receives: every rendered score,
 * state, or count is an API value verbatim. Errors are the service's
 * {status, code, message, detail} bodies, surfaced as ApiFailure.
 */

export interface Config {
  /** Base URL of the service; "" means same origin. */
  baseUrl: string;
  /** Optional bearer token (HAR_API_TOKEN on the server side). */
  token?: string;
}

export interface Suggestion {
  canonical_label: string;
  score: number;
  basis: string;
}

export interface Mapping {
  mapping_id: string;
  dataset_id: string;
  raw_label: string;
  suggestions: Suggestion[];
  status: "pending" | "accepted" | "rejected" | "manual";
  canonical_label: string | null;
  decided_by: string;
  decided_at: string;
}

export interface JobCounts {
  discovered: number;
  parsed: number;
  aligned: number;
  stored: number;
}

export interface ImportJob {
  job_id: string;
  driver_id: string;
  dataset_id: string;
  root_path: string;
  policy: string;
  state: "staged" | "awaiting_labels" | "finalizing" | "complete" | "failed";
  counts: JobCounts;
  file_errors: { path: string; error: string }[];
  reason: string;
  created_at: string;
}

export interface DictionaryEntry {
  description: string;
  kind: "state" | "transition" | "fall";
  aliases: string[];
}

export interface ApiErrorBody {
  status: number;
  code: string;
  message: string;
  detail: Record<string, unknown>;
}

export class ApiFailure extends Error {
  constructor(public readonly body: ApiErrorBody) {
    super(`${body.code}: ${body.message}`);
  }
}

export type DecisionAction = "accept" | "reject" | "manual";

export class Api {
  constructor(private readonly config: Config) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = {};
    if (body !== undefined) headers["content-type"] = "application/json";
    if (this.config.token) headers["authorization"] = `Bearer ${this.config.token}`;
    const response = await fetch(this.config.baseUrl + path, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!response.ok) {
      let parsed: ApiErrorBody;
      try {
        parsed = (await response.json()) as ApiErrorBody;
      } catch {
        parsed = { status: response.status, code: "http_error", message: response.statusText, detail: {} };
      }
      throw new ApiFailure(parsed);
    }
    return (await response.json()) as T;
  }

  listMappings(datasetId?: string, status?: string): Promise<Mapping[]> {
    const params = new URLSearchParams();
    if (datasetId) params.set("dataset_id", datasetId);
    if (status) params.set("status", status);
    const qs = params.toString();
    return this.request("GET", `/labels/mappings${qs ? "?" + qs : ""}`);
  }

  decide(mappingId: string, action: DecisionAction, canonical?: string): Promise<Mapping> {
    return this.request("POST", `/labels/mappings/${mappingId}/decision`, {
      action,
      canonical: canonical ?? null,
      who: "review-ui",
    });
  }

  getJob(jobId: string): Promise<ImportJob> {
    return this.request("GET", `/imports/${jobId}`);
  }

  getDictionary(): Promise<{ labels: Record<string, DictionaryEntry> }> {
    return this.request("GET", "/labels/dictionary");
  }

  addLabel(name: string, kind: string, description: string, aliases: string[]): Promise<{ canonical_label: string }> {
    return this.request("POST", "/labels/dictionary", { name, kind, description, aliases });
  }
}
