/** Pure fold from the ordered event stream into the rendered console model.
 *
 * The view holds no truth of its own: every field below is derived from
 * events, so replaying a recorded log must reproduce the live model exactly.
 */

import type {
  AlertRaisedPayload,
  Distribution,
  EmotionLabel,
  RequirementTaggedPayload,
  ScoringFailedPayload,
  SegmentCapturedPayload,
  SegmentScoredPayload,
  SessionEvent,
} from "./events.js";

export type BarStatus = "captured" | "scored" | "failed";

export interface TimelineBar {
  segmentId: number;
  tStart: number;
  tEnd: number;
  status: BarStatus;
  dominant?: EmotionLabel;
  fused?: Distribution;
  failureReason?: string;
}

export interface TagInterval {
  tStart: number;
  /** null while the requirement is still under discussion */
  tEnd: number | null;
}

export interface TagLane {
  requirementId: string;
  label: string;
  intervals: TagInterval[];
}

export interface AlertBand {
  tStart: number;
  tEnd: number;
  kind: string;
  meanValence: number;
  segmentIds: number[];
}

export type SessionStatus = "connecting" | "live" | "ended";

export interface ConsoleModel {
  sessionId: string;
  name: string;
  status: SessionStatus;
  lastSeq: number;
  /** strictly ascending by segmentId */
  bars: TimelineBar[];
  alerts: AlertBand[];
  /** keyed and iterated by requirementId for deterministic lane order */
  lanes: Record<string, TagLane>;
  endedAtT: number | null;
}

export function initialModel(): ConsoleModel {
  return {
    sessionId: "",
    name: "",
    status: "connecting",
    lastSeq: -1,
    bars: [],
    alerts: [],
    lanes: {},
    endedAtT: null,
  };
}

export class EventGapError extends Error {
  constructor(expected: number, got: number) {
    super(`event gap: expected seq ${expected}, got ${got}`);
    this.name = "EventGapError";
  }
}

/** Apply one event; returns a new model, the input is never mutated. */
export function applyEvent(model: ConsoleModel, event: SessionEvent): ConsoleModel {
  if (event.seq !== model.lastSeq + 1) {
    throw new EventGapError(model.lastSeq + 1, event.seq);
  }
  const next: ConsoleModel = {
    ...model,
    lastSeq: event.seq,
    bars: model.bars.slice(),
    alerts: model.alerts.slice(),
    lanes: Object.fromEntries(
      Object.entries(model.lanes).map(([k, lane]) => [
        k,
        { ...lane, intervals: lane.intervals.slice() },
      ]),
    ),
  };
  switch (event.kind) {
    case "session_started": {
      const p = event.payload as { session_id: string; name?: string };
      next.sessionId = p.session_id;
      next.name = p.name ?? "";
      next.status = "live";
      break;
    }
    case "segment_captured": {
      const p = event.payload as unknown as SegmentCapturedPayload;
      upsertBar(next.bars, {
        segmentId: p.segment_id,
        tStart: p.t_start,
        tEnd: p.t_end,
        status: "captured",
      });
      break;
    }
    case "segment_scored": {
      const p = event.payload as unknown as SegmentScoredPayload;
      const bar = next.bars.find((b) => b.segmentId === p.segment_id);
      if (!bar) break; // scored before captured never happens on a gapless log
      Object.assign(bar, {
        status: "scored" as const,
        dominant: p.dominant,
        fused: p.fused,
      });
      break;
    }
    case "scoring_failed": {
      const p = event.payload as unknown as ScoringFailedPayload;
      const bar = next.bars.find((b) => b.segmentId === p.segment_id);
      if (bar) Object.assign(bar, { status: "failed" as const, failureReason: p.reason });
      break;
    }
    case "requirement_tagged": {
      const p = event.payload as unknown as RequirementTaggedPayload;
      applyTag(next.lanes, p);
      break;
    }
    case "alert_raised": {
      const p = event.payload as unknown as AlertRaisedPayload;
      next.alerts.push({
        tStart: p.t_start,
        tEnd: p.t_end,
        kind: p.kind,
        meanValence: p.mean_valence,
        segmentIds: p.segment_ids,
      });
      break;
    }
    case "session_ended": {
      const p = event.payload as { t_end?: number };
      next.status = "ended";
      next.endedAtT = p.t_end ?? null;
      break;
    }
  }
  return next;
}

function upsertBar(bars: TimelineBar[], bar: TimelineBar): void {
  // keep strict segment_id order regardless of arrival interleaving
  const at = bars.findIndex((b) => b.segmentId >= bar.segmentId);
  if (at === -1) bars.push(bar);
  else if (bars[at]!.segmentId === bar.segmentId) bars[at] = bar;
  else bars.splice(at, 0, bar);
}

function applyTag(lanes: Record<string, TagLane>, p: RequirementTaggedPayload): void {
  const lane = (lanes[p.requirement_id] ??= {
    requirementId: p.requirement_id,
    label: p.label ?? "",
    intervals: [],
  });
  if (p.action === "open") {
    lane.intervals.push({ tStart: p.t, tEnd: null });
  } else {
    const open = lane.intervals.find((iv) => iv.tEnd === null);
    if (open) open.tEnd = p.t;
  }
}

export function foldEvents(events: Iterable<SessionEvent>): ConsoleModel {
  let model = initialModel();
  for (const event of events) model = applyEvent(model, event);
  return model;
}

const BAR_GLYPH: Record<BarStatus, string> = {
  captured: "░",
  scored: "▇",
  failed: "✗",
};

/** Deterministic text rendering of the model, one line per drawable element. */
export function renderLines(model: ConsoleModel): string[] {
  const lines: string[] = [
    `session ${model.sessionId} (${model.status})` +
      (model.endedAtT !== null ? ` ended@${model.endedAtT}` : ""),
  ];
  for (const bar of model.bars) {
    const label = bar.status === "scored" ? bar.dominant : bar.failureReason ?? "pending";
    lines.push(
      `#${String(bar.segmentId).padStart(3, "0")} ` +
        `[${bar.tStart}-${bar.tEnd}) ${BAR_GLYPH[bar.status]} ${label}`,
    );
  }
  for (const alert of model.alerts) {
    lines.push(
      `! ${alert.kind} [${alert.tStart}-${alert.tEnd}] ` +
        `valence=${alert.meanValence} segments=${alert.segmentIds.join(",")}`,
    );
  }
  for (const id of Object.keys(model.lanes).sort()) {
    const lane = model.lanes[id]!;
    const spans = lane.intervals
      .map((iv) => `[${iv.tStart}-${iv.tEnd === null ? "…" : iv.tEnd}]`)
      .join(" ");
    lines.push(`tag ${id} ${spans}`);
  }
  return lines;
}
