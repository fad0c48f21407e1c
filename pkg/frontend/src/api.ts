/** Thin fetch client for the session service; all schedule math stays server-side. */

import type { MessageResponse, StartSessionResponse, StatusResponse } from "./types.js";

export class ApiError extends Error {
  constructor(
    message: string,
    readonly status: number,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class SessionApi {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    } catch (err) {
      throw new ApiError(`cannot reach the scheduling service: ${String(err)}`, 0);
    }
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const body = (await response.json()) as { detail?: string };
        if (body.detail) detail = body.detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(detail, response.status);
    }
    return (await response.json()) as T;
  }

  startSession(): Promise<StartSessionResponse> {
    return this.request<StartSessionResponse>("/sessions", { method: "POST" });
  }

  sendMessage(sessionId: string, text: string): Promise<MessageResponse> {
    return this.request<MessageResponse>(`/sessions/${sessionId}/messages`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ text }),
    });
  }

  getStatus(sessionId: string): Promise<StatusResponse> {
    return this.request<StatusResponse>(`/sessions/${sessionId}/status`);
  }

  deleteSession(sessionId: string): Promise<unknown> {
    return this.request(`/sessions/${sessionId}`, { method: "DELETE" });
  }
}
