/** Typed client for the voxrag service. Overlapping submissions cancel the
 * prior in-flight request, so only the latest query ever resolves. */

import type { AnswerResponse, QueryInput, SegmentView } from "./types.js";

export class ServiceError extends Error {
  constructor(public status: number, message: string) {
    super(message);
    this.name = "ServiceError";
  }
}

export class VoxRagClient {
  private inflight: AbortController | null = null;

  constructor(private baseUrl: string, private fetchImpl: typeof fetch = fetch) {}

  segmentAudioUrl(segmentId: string): string {
    return `${this.baseUrl}/segments/${encodeURIComponent(segmentId)}/audio`;
  }

  async answer(query: QueryInput): Promise<AnswerResponse> {
    if (this.inflight) {
      this.inflight.abort();
    }
    const controller = new AbortController();
    this.inflight = controller;
    try {
      const params = new URLSearchParams();
      if (query.k !== undefined) params.set("k", String(query.k));
      if (query.rerank) params.set("rerank", "true");
      if (query.text) params.set("text", query.text);
      const suffix = params.toString() ? `?${params}` : "";
      const response = await this.fetchImpl(`${this.baseUrl}/answer${suffix}`, {
        method: "POST",
        headers: { "content-type": "audio/wav" },
        body: query.audio ?? new ArrayBuffer(0),
        signal: controller.signal,
      });
      if (!response.ok) {
        throw new ServiceError(response.status, await safeErrorText(response));
      }
      return (await response.json()) as AnswerResponse;
    } finally {
      if (this.inflight === controller) {
        this.inflight = null;
      }
    }
  }

  async segment(segmentId: string): Promise<SegmentView> {
    const response = await this.fetchImpl(
      `${this.baseUrl}/segments/${encodeURIComponent(segmentId)}`);
    if (!response.ok) {
      throw new ServiceError(response.status, await safeErrorText(response));
    }
    return (await response.json()) as SegmentView;
  }

  async healthy(): Promise<boolean> {
    try {
      const response = await this.fetchImpl(`${this.baseUrl}/healthz`);
      return response.ok;
    } catch {
      return false;
    }
  }
}

async function safeErrorText(response: Response): Promise<string> {
  try {
    const body = await response.json();
    return typeof body?.detail === "string" ? body.detail : JSON.stringify(body);
  } catch {
    return `service returned ${response.status}`;
  }
}
