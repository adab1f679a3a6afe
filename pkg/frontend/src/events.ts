/** Wire types for the session event stream the console consumes. */

export const EMOTION_LABELS = [
  "joy",
  "sadness",
  "anger",
  "anticipation",
  "disgust",
  "fear",
  "trust",
  "surprise",
] as const;

export type EmotionLabel = (typeof EMOTION_LABELS)[number];

export type Distribution = Record<EmotionLabel, number>;

export type EventKind =
  | "session_started"
  | "segment_captured"
  | "segment_scored"
  | "scoring_failed"
  | "requirement_tagged"
  | "alert_raised"
  | "session_ended";

export interface SessionEvent {
  seq: number;
  ts: string;
  kind: EventKind;
  payload: Record<string, unknown>;
}

export interface SegmentCapturedPayload {
  segment_id: number;
  session_id: string;
  t_start: number;
  t_end: number;
  modalities_present: string[];
}

export interface SegmentScoredPayload {
  segment_id: number;
  fused: Distribution;
  dominant: EmotionLabel;
  latency_ms: number;
  per_modality: Record<string, { distribution: Distribution; model_id: string }>;
  failures: Record<string, string>;
}

export interface ScoringFailedPayload {
  segment_id: number;
  reason: string;
}

export interface RequirementTaggedPayload {
  requirement_id: string;
  action: "open" | "close";
  t: number;
  label?: string;
}

export interface AlertRaisedPayload {
  session_id: string;
  t_start: number;
  t_end: number;
  kind: string;
  trigger_labels: EmotionLabel[];
  mean_valence: number;
  segment_ids: number[];
}

/** Outbound command on the event socket. */
export interface TagCommand {
  cmd: "tag";
  requirement_id: string;
  action: "open" | "close";
  t: number;
  label?: string;
}

/** Server push when an inbound command is refused. */
export interface CommandRejected {
  kind: "command_rejected";
  error: string;
  message: string;
}

export function isRejection(msg: unknown): msg is CommandRejected {
  return (
    typeof msg === "object" &&
    msg !== null &&
    (msg as { kind?: string }).kind === "command_rejected"
  );
}
