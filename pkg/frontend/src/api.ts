// Thin fetch wrapper over the gateway HTTP API. The fetch implementation is
// injectable so tests can run against an in-memory gateway stub.

import type {
  GatewayErrorBody,
  InteractionEvent,
  StatsReport,
  TourBundle,
  ValidationReport,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class GatewayError extends Error {
  readonly status: number;
  readonly code: string;
  readonly details: Record<string, unknown>;
  readonly report: ValidationReport | null;

  constructor(status: number, body: GatewayErrorBody | null, fallback: string) {
    const err = body?.error;
    super(err?.message ?? fallback);
    this.status = status;
    this.code = err?.code ?? "HTTP_" + status;
    this.details = err ? { ...err } : {};
    this.report = body?.report ?? null;
  }
}

async function errorFrom(resp: Response): Promise<GatewayError> {
  let body: GatewayErrorBody | null = null;
  try {
    body = (await resp.json()) as GatewayErrorBody;
  } catch {
    body = null;
  }
  return new GatewayError(resp.status, body, `gateway returned ${resp.status}`);
}

export interface BundleResult {
  bundle: TourBundle;
  sessionId: string;
}

export class GatewayClient {
  readonly baseUrl: string;
  token: string | null;
  private readonly fetchFn: FetchLike;

  constructor(baseUrl: string, token: string | null = null, fetchFn?: FetchLike) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
    this.token = token;
    this.fetchFn = fetchFn ?? ((url, init) => fetch(url, init));
  }

  private headers(json = false): Record<string, string> {
    const h: Record<string, string> = {};
    if (json) h["Content-Type"] = "application/json";
    if (this.token) h["Authorization"] = `Bearer ${this.token}`;
    return h;
  }

  private async get(path: string, admin = false): Promise<Response> {
    const resp = await this.fetchFn(this.baseUrl + path, {
      headers: admin ? this.headers() : {},
    });
    if (!resp.ok) throw await errorFrom(resp);
    return resp;
  }

  private async send(method: string, path: string, body: unknown): Promise<Response> {
    const resp = await this.fetchFn(this.baseUrl + path, {
      method,
      headers: this.headers(true),
      body: JSON.stringify(body),
    });
    if (!resp.ok) throw await errorFrom(resp);
    return resp;
  }

  async listTours(): Promise<string[]> {
    const resp = await this.get("/api/v1/tours");
    return ((await resp.json()) as { tours: string[] }).tours;
  }

  async getBundle(tourId: string, languages: string[] = []): Promise<BundleResult> {
    const query = languages.length
      ? "?" + languages.map((l) => "lang=" + encodeURIComponent(l)).join("&")
      : "";
    const resp = await this.get(`/api/v1/tours/${encodeURIComponent(tourId)}/bundle${query}`);
    return {
      bundle: (await resp.json()) as TourBundle,
      sessionId: resp.headers.get("X-Session-Id") ?? cryptoSessionId(),
    };
  }

  async postEvents(events: InteractionEvent[]): Promise<number> {
    const resp = await this.send("POST", "/api/v1/events", { events });
    return ((await resp.json()) as { stored: number }).stored;
  }

  async getStats(params: {
    group: string;
    from: number;
    to: number;
  }): Promise<StatsReport> {
    const query = new URLSearchParams({
      group: params.group,
      from: String(params.from),
      to: String(params.to),
      format: "json",
    });
    const resp = await this.get("/api/v1/stats?" + query.toString(), true);
    return (await resp.json()) as StatsReport;
  }

  /** Admin view of one tour: raw manifest plus its validation report. */
  async getTour(tourId: string): Promise<{
    manifest: Record<string, unknown>;
    validation: ValidationReport;
  }> {
    const resp = await this.get(`/api/v1/tours/${encodeURIComponent(tourId)}`, true);
    return (await resp.json()) as {
      manifest: Record<string, unknown>;
      validation: ValidationReport;
    };
  }

  async postEdit(
    tourId: string,
    edit: Record<string, unknown>,
    expectedRevision?: number,
    payloadB64?: string,
  ): Promise<{ revision: number }> {
    const envelope: Record<string, unknown> = { edit };
    if (expectedRevision !== undefined) envelope["expected_revision"] = expectedRevision;
    if (payloadB64 !== undefined) envelope["payload_b64"] = payloadB64;
    const resp = await this.send(
      "POST",
      `/api/v1/tours/${encodeURIComponent(tourId)}/edits`,
      envelope,
    );
    return (await resp.json()) as { revision: number };
  }

  async fetchText(locator: string): Promise<string> {
    const url = locator.startsWith("/") ? this.baseUrl + locator : locator;
    const resp = await this.fetchFn(url, {});
    if (!resp.ok) throw await errorFrom(resp);
    return resp.text();
  }

  mediaUrl(locator: string): string {
    return locator.startsWith("/") ? this.baseUrl + locator : locator;
  }
}

function cryptoSessionId(): string {
  const bytes = new Uint8Array(8);
  (globalThis.crypto ?? { getRandomValues: fallbackRandom }).getRandomValues(bytes);
  return "web-" + Array.from(bytes, (b) => b.toString(16).padStart(2, "0")).join("");
}

function fallbackRandom(bytes: Uint8Array): Uint8Array {
  for (let i = 0; i < bytes.length; i++) bytes[i] = Math.floor(Math.random() * 256);
  return bytes;
}
