/**
 * Client-side session state machine.
 *
 * One turn in flight at a time: sends during an active turn are queued and
 * flushed when the turn settles, mirroring the service's 409 contract. The
 * UI layer subscribes to state snapshots and re-renders; it never computes
 * schedule numbers itself.
 */

import { ApiError, SessionApi } from "./api.js";
import { scheduleDiff } from "./diff.js";
import { renderMessageHtml, renderScheduleTable } from "./render.js";
import type { MessageResponse, ScheduleRow, UiMessage, UiSession } from "./types.js";

export type Listener = (session: UiSession) => void;

const RETRY_DELAY_MS = 400;

export class SessionController {
  private session: UiSession | null = null;
  private queue: string[] = [];
  private listeners: Listener[] = [];

  constructor(
    private readonly api: SessionApi,
    private readonly sleep: (ms: number) => Promise<void> = (ms) =>
      new Promise((resolve) => setTimeout(resolve, ms)),
  ) {}

  get state(): UiSession | null {
    return this.session;
  }

  subscribe(listener: Listener): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    if (this.session) {
      for (const listener of this.listeners) {
        listener(this.session);
      }
    }
  }

  /** POST /sessions and render the opening default schedule. */
  async start(): Promise<UiSession> {
    const response = await this.api.startSession();
    const opening = response.opening;
    this.session = {
      sessionId: response.session_id,
      messages: [{ role: "assistant", html: renderMessageHtml(opening.text) }],
      latestSchedule: opening.schedule,
      previousSchedule: null,
      latestObjectives: opening.objectives,
      modelSummary: opening.model_summary,
      turnInFlight: false,
    };
    this.emit();
    return this.session;
  }

  /**
   * Send one user message. Empty input is rejected client-side; a send while
   * a turn is in flight is queued and dispatched when the turn settles.
   * Returns true when the message was sent or queued.
   */
  async send(text: string): Promise<boolean> {
    const trimmed = text.trim();
    if (!trimmed) {
      return false;
    }
    if (!this.session) {
      throw new Error("session not started");
    }
    if (this.session.turnInFlight) {
      this.queue.push(trimmed);
      return true;
    }
    await this.dispatch(trimmed);
    return true;
  }

  private async dispatch(text: string): Promise<void> {
    const session = this.session;
    if (!session) return;
    session.turnInFlight = true;
    session.messages.push({ role: "user", html: renderMessageHtml(text) });
    this.emit();
    try {
      const response = await this.sendWithConflictRetry(session.sessionId, text);
      this.applyReply(response);
    } catch (err) {
      const message: UiMessage = {
        role: "error",
        html: renderMessageHtml(err instanceof Error ? err.message : String(err)),
      };
      session.messages.push(message);
    } finally {
      session.turnInFlight = false;
      this.emit();
      const next = this.queue.shift();
      if (next !== undefined) {
        await this.dispatch(next);
      }
    }
  }

  /** A 409 means another turn is still active server-side: wait it out. */
  private async sendWithConflictRetry(
    sessionId: string,
    text: string,
    attempts = 20,
  ): Promise<MessageResponse> {
    for (let attempt = 0; ; attempt += 1) {
      try {
        return await this.api.sendMessage(sessionId, text);
      } catch (err) {
        if (!(err instanceof ApiError) || err.status !== 409 || attempt >= attempts) {
          throw err;
        }
        await this.sleep(RETRY_DELAY_MS);
        const status = await this.api.getStatus(sessionId);
        if (status.turn_in_flight) {
          await this.sleep(RETRY_DELAY_MS);
        }
      }
    }
  }

  private applyReply(response: MessageResponse): void {
    const session = this.session;
    if (!session) return;
    session.messages.push({
      role: "assistant",
      html: renderMessageHtml(response.visible_text),
    });
    session.modelSummary = response.model_summary;
    for (const presented of response.schedules) {
      session.previousSchedule = session.latestSchedule;
      session.latestSchedule = presented.schedule;
      session.latestObjectives = presented.objectives;
    }
  }

  /** Highlighted table of the latest proposal versus the one before it. */
  renderLatestScheduleTable(): string {
    const session = this.session;
    if (!session) return "";
    return renderScheduleTable(
      session.latestSchedule,
      scheduleDiff(session.previousSchedule, session.latestSchedule),
    );
  }
}

export function changedSchools(
  prev: ScheduleRow[] | null,
  next: ScheduleRow[],
): string[] {
  return [...scheduleDiff(prev, next)].sort();
}
