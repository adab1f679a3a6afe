/** Deterministic recorded session: 48 segments, tags, one alert, clean end. */

import {
  EMOTION_LABELS,
  type Distribution,
  type EmotionLabel,
  type SessionEvent,
} from "../src/events.js";

export function concentrated(label: EmotionLabel, mass = 0.8): Distribution {
  const rest = (1 - mass) / (EMOTION_LABELS.length - 1);
  return Object.fromEntries(
    EMOTION_LABELS.map((l) => [l, l === label ? mass : rest]),
  ) as Distribution;
}

let tsCounter = 0;

function at(seq: number, kind: SessionEvent["kind"], payload: Record<string, unknown>): SessionEvent {
  tsCounter += 1;
  return { seq, ts: `2026-08-24T10:00:${String(tsCounter % 60).padStart(2, "0")}+00:00`, kind, payload };
}

export function recordedSessionLog(segments = 48): SessionEvent[] {
  const events: SessionEvent[] = [];
  let seq = 0;
  events.push(
    at(seq++, "session_started", { session_id: "fixture-1", name: "recorded interview" }),
  );
  events.push(
    at(seq++, "requirement_tagged", { requirement_id: "R1", action: "open", t: 0 }),
  );
  for (let i = 0; i < segments; i++) {
    const t0 = i * 10;
    events.push(
      at(seq++, "segment_captured", {
        segment_id: i,
        session_id: "fixture-1",
        t_start: t0,
        t_end: t0 + 10,
        modalities_present: ["audio", "text"],
        payload_refs: { audio: `store/${i}/audio.wav`, text: `store/${i}/transcript.txt` },
      }),
    );
    const label = EMOTION_LABELS[i % EMOTION_LABELS.length]!;
    if (i === 13) {
      events.push(
        at(seq++, "scoring_failed", { segment_id: i, reason: "timeout" }),
      );
    } else {
      events.push(
        at(seq++, "segment_scored", {
          segment_id: i,
          per_modality: {},
          fused: concentrated(label),
          dominant: label,
          latency_ms: 4.2,
          failures: {},
        }),
      );
    }
    if (i === 19) {
      events.push(
        at(seq++, "requirement_tagged", { requirement_id: "R1", action: "close", t: 200 }),
      );
      events.push(
        at(seq++, "requirement_tagged", { requirement_id: "R2", action: "open", t: 200 }),
      );
    }
    if (i === 25) {
      events.push(
        at(seq++, "alert_raised", {
          session_id: "fixture-1",
          t_start: 230,
          t_end: 260,
          kind: "sustained_negative",
          trigger_labels: ["anger", "sadness"],
          mean_valence: -0.62,
          segment_ids: [23, 24, 25],
        }),
      );
    }
  }
  // open tags auto-close at session end, then the stream ends
  events.push(
    at(seq++, "requirement_tagged", { requirement_id: "R2", action: "close", t: segments * 10 }),
  );
  events.push(at(seq++, "session_ended", { t_end: segments * 10 }));
  return events;
}
