/**
 * Thin typed client for the run gateway.
 *
 * Every response passes through its zod schema, so a drifting server
 * surfaces as a loud parse error instead of a silently wrong board.
 */

import {
  ApprovalViewSchema,
  CommandAckSchema,
  EventsPageSchema,
  ErrorBodySchema,
  MetricsViewSchema,
  RunDescriptorSchema,
  StateViewSchema,
  TripAckSchema,
  type ApprovalView,
  type EventRecord,
  type EventsPage,
  type MetricsView,
  type RunDescriptor,
  type StateView,
} from "./schemas.js";
import { z } from "zod";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class GatewayError extends Error {
  constructor(
    public readonly status: number,
    public readonly error: string,
    public readonly detail: unknown = null,
  ) {
    super(`${status} ${error}`);
    this.name = "GatewayError";
  }
}

export interface CreateRunOptions {
  scenario: string | Record<string, unknown>;
  seed?: number;
  strategy?: string;
  ticksPerSecond?: number;
  paused?: boolean;
}

export class GatewayClient {
  private readonly fetchImpl: FetchLike;

  constructor(
    private readonly baseUrl: string,
    fetchImpl?: FetchLike,
  ) {
    // bind: bare window.fetch throws "Illegal invocation" without its receiver
    this.fetchImpl = fetchImpl ?? ((url, init) => fetch(url, init));
  }

  private async request<T>(
    method: string,
    path: string,
    schema: z.ZodType<T>,
    body?: unknown,
  ): Promise<T> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const resp = await this.fetchImpl(this.baseUrl + path, init);
    const text = await resp.text();
    let doc: unknown = null;
    if (text) {
      try {
        doc = JSON.parse(text);
      } catch {
        throw new GatewayError(resp.status, "bad_response", text.slice(0, 200));
      }
    }
    if (!resp.ok) {
      const parsed = ErrorBodySchema.safeParse(doc);
      if (parsed.success) {
        throw new GatewayError(resp.status, parsed.data.error, parsed.data.detail);
      }
      throw new GatewayError(resp.status, "http_error", doc);
    }
    return schema.parse(doc);
  }

  createRun(opts: CreateRunOptions): Promise<RunDescriptor> {
    const body: Record<string, unknown> = { scenario: opts.scenario };
    if (opts.seed !== undefined) body.seed = opts.seed;
    if (opts.strategy !== undefined) body.strategy = opts.strategy;
    if (opts.ticksPerSecond !== undefined) body.ticks_per_second = opts.ticksPerSecond;
    if (opts.paused !== undefined) body.paused = opts.paused;
    return this.request("POST", "/runs", RunDescriptorSchema, body);
  }

  submitTrip(runId: string, passenger: string, text: string) {
    return this.request("POST", `/runs/${encodeURIComponent(runId)}/trips`, TripAckSchema, {
      passenger,
      text,
    });
  }

  command(runId: string, kind: string, payload: Record<string, unknown> = {}) {
    return this.request("POST", `/runs/${encodeURIComponent(runId)}/commands`, CommandAckSchema, {
      kind,
      payload,
    });
  }

  approvals(runId: string, pending = true): Promise<ApprovalView[]> {
    return this.request(
      "GET",
      `/runs/${encodeURIComponent(runId)}/approvals?pending=${pending}`,
      z.array(ApprovalViewSchema),
    );
  }

  state(runId: string): Promise<StateView> {
    return this.request("GET", `/runs/${encodeURIComponent(runId)}/state`, StateViewSchema);
  }

  metrics(runId: string): Promise<MetricsView> {
    return this.request("GET", `/runs/${encodeURIComponent(runId)}/metrics`, MetricsViewSchema);
  }

  events(runId: string, from = 0): Promise<EventsPage> {
    return this.request(
      "GET",
      `/runs/${encodeURIComponent(runId)}/events?from=${from}`,
      EventsPageSchema,
    );
  }

  /** Walk the event log page by page from a cursor until the server has no more. */
  async *pageAll(runId: string, from = 0): AsyncGenerator<EventRecord, void, void> {
    let cursor = from;
    for (;;) {
      const page = await this.events(runId, cursor);
      for (const ev of page.events) yield ev;
      if (page.events.length === 0 || page.next <= cursor) return;
      cursor = page.next;
    }
  }

  /** URL for an EventSource subscription (the events route streams SSE on request). */
  eventStreamUrl(runId: string, from = 0): string {
    return `${this.baseUrl}/runs/${encodeURIComponent(runId)}/events?from=${from}`;
  }
}
