/** Payload shapes of the session service API (single source of truth). */

export interface ScheduleRow {
  school: string;
  start: string;
}

export interface Objectives {
  peak_load: number;
  peak_load_hundreds: string;
  avg_deviation_minutes: string;
  load_display: string;
  deviation_display: string;
}

export interface PresentedSchedule {
  schedule: ScheduleRow[];
  objectives: Objectives;
}

export interface OpeningPayload {
  text: string;
  schedule: ScheduleRow[];
  objectives: Objectives;
  model_summary: string;
}

export interface StartSessionResponse {
  session_id: string;
  opening: OpeningPayload;
}

export interface MessageResponse {
  visible_text: string;
  schedules: PresentedSchedule[];
  model_summary: string;
  solver_calls: number;
}

export interface StatusResponse {
  session_id: string;
  turn_in_flight: boolean;
}

export type MessageRole = "assistant" | "user" | "error";

export interface UiMessage {
  role: MessageRole;
  html: string;
}

/** Client-side session state; the UI renders this and nothing else. */
export interface UiSession {
  sessionId: string;
  messages: UiMessage[];
  latestSchedule: ScheduleRow[];
  previousSchedule: ScheduleRow[] | null;
  latestObjectives: Objectives;
  modelSummary: string;
  turnInFlight: boolean;
}
