"""Application layer: requirement/emotion linkage, prioritization, alerts, reports."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from .core import (
    LABEL_ORDER,
    EmotionDistribution,
    EmotionLabel,
    MediaSegment,
    RequirementTag,
    SegmentScore,
    ValenceMap,
    _fmt,
    valence_score,
)

ALERT_WINDOW_N = 3
ALERT_VALENCE_THRESHOLD = -0.3


class SessionStillOpenError(RuntimeError):
    pass


@dataclass(frozen=True)
class RequirementEmotionRecord:
    requirement_id: str
    segments: tuple[int, ...]
    aggregate: Optional[EmotionDistribution]
    valence: Optional[float]
    evidence_count: int


@dataclass(frozen=True)
class RankedRequirement:
    requirement_id: str
    priority_score: float
    rank: int


@dataclass(frozen=True)
class Alert:
    session_id: str
    t_start: float
    t_end: float
    kind: str  # "sustained_negative"; "confusion_spike" reserved, never emitted
    trigger_labels: tuple[str, ...]
    mean_valence: float
    segment_ids: tuple[int, ...]


def _overlap(a_start: float, a_end: float, b_start: float, b_end: float) -> float:
    return min(a_end, b_end) - max(a_start, b_start)


def link(
    scores: Sequence[SegmentScore],
    segments: Mapping[int, tuple[float, float]],
    tags: Sequence[RequirementTag],
) -> list[RequirementEmotionRecord]:
    """Associate each scored segment with every requirement whose tag intervals
    it overlaps by more than zero seconds; aggregate is the renormalized
    arithmetic mean of the fused distributions."""
    by_req: dict[str, list[RequirementTag]] = {}
    for t in tags:
        if t.t_end is None:
            raise ValueError(f"open tag for {t.requirement_id}; close tags before linking")
        by_req.setdefault(t.requirement_id, []).append(t)
    records: list[RequirementEmotionRecord] = []
    for req_id in sorted(by_req):
        matched: list[SegmentScore] = []
        for s in sorted(scores, key=lambda s: s.segment_id):
            if s.segment_id not in segments:
                continue
            seg_start, seg_end = segments[s.segment_id]
            if any(
                _overlap(seg_start, seg_end, t.t_start, t.t_end) > 0
                for t in by_req[req_id]
            ):
                matched.append(s)
        if matched:
            sums = [0.0] * len(LABEL_ORDER)
            for s in matched:
                for i, l in enumerate(LABEL_ORDER):
                    sums[i] += s.fused[l]
            total = sum(sums)
            agg = EmotionDistribution(tuple(v / total for v in sums))
            val = valence_score(agg, ValenceMap.default())
        else:
            agg, val = None, None
        records.append(
            RequirementEmotionRecord(
                requirement_id=req_id,
                segments=tuple(s.segment_id for s in matched),
                aggregate=agg,
                valence=val,
                evidence_count=len(matched),
            )
        )
    return records


def prioritize(
    records: Sequence[RequirementEmotionRecord],
    valence_map: ValenceMap | None = None,
) -> list[RankedRequirement]:
    """priority_score = valence(aggregate) * (1 - 1/(1+evidence_count)); the
    evidence discount keeps a single joyful segment from dominating."""
    vmap = valence_map or ValenceMap.default()
    scored: list[tuple[float, int, str]] = []
    zero_evidence: list[str] = []
    for r in records:
        if r.evidence_count == 0 or r.aggregate is None:
            zero_evidence.append(r.requirement_id)
            continue
        val = valence_score(r.aggregate, vmap)
        score = val * (1.0 - 1.0 / (1.0 + r.evidence_count))
        scored.append((score, r.evidence_count, r.requirement_id))
    scored.sort(key=lambda t: (-t[0], -t[1], t[2]))
    ranking = [
        RankedRequirement(req_id, score, rank)
        for rank, (score, _, req_id) in enumerate(scored, start=1)
    ]
    next_rank = len(ranking) + 1
    for req_id in sorted(zero_evidence):
        ranking.append(RankedRequirement(req_id, 0.0, next_rank))
        next_rank += 1
    return ranking


def detect_alerts(
    scores: Sequence[SegmentScore],
    segments: Mapping[int, tuple[float, float]],
    session_id: str,
    valence_map: ValenceMap | None = None,
    window_n: int = ALERT_WINDOW_N,
    threshold: float = ALERT_VALENCE_THRESHOLD,
) -> list[Alert]:
    """Emit a SustainedNegative alert when fused valence stays below threshold
    for window_n consecutive segments; overlapping windows merge."""
    vmap = valence_map or ValenceMap.default()
    ordered = sorted(scores, key=lambda s: s.segment_id)
    valences = [valence_score(s.fused, vmap) for s in ordered]
    runs: list[tuple[int, int]] = []  # [start, end) indexes of negative runs
    i = 0
    while i < len(valences):
        if valences[i] < threshold:
            j = i
            while j < len(valences) and valences[j] < threshold:
                j += 1
            if j - i >= window_n:
                runs.append((i, j))
            i = j
        else:
            i += 1
    alerts: list[Alert] = []
    for i, j in runs:
        run = ordered[i:j]
        ids = tuple(s.segment_id for s in run)
        labels = tuple(sorted({s.dominant.value for s in run}))
        mean_val = sum(valences[i:j]) / (j - i)
        t_start = segments[ids[0]][0]
        t_end = segments[ids[-1]][1]
        alerts.append(
            Alert(
                session_id=session_id,
                t_start=t_start,
                t_end=t_end,
                kind="sustained_negative",
                trigger_labels=labels,
                mean_valence=mean_val,
                segment_ids=ids,
            )
        )
    return alerts


def build_report(
    session_meta: Mapping,
    scores: Sequence[SegmentScore],
    segments: Mapping[int, tuple[float, float]],
    records: Sequence[RequirementEmotionRecord],
    ranking: Sequence[RankedRequirement],
    alerts: Sequence[Alert],
    session_open: bool = False,
) -> dict:
    """Canonical report object; serialize with render_report_json for the
    byte-deterministic form."""
    if session_open:
        raise SessionStillOpenError("cannot report on an open session")
    timeline = [
        {
            "segment_id": s.segment_id,
            "t_start": _fmt(segments[s.segment_id][0]),
            "t_end": _fmt(segments[s.segment_id][1]),
            "dominant": s.dominant.value,
            "fused": s.fused.to_json_obj(),
        }
        for s in sorted(scores, key=lambda s: s.segment_id)
        if s.segment_id in segments
    ]
    return {
        "session": dict(session_meta),
        "timeline": timeline,
        "requirements": [
            {
                "requirement_id": r.requirement_id,
                "segments": list(r.segments),
                "evidence_count": r.evidence_count,
                "aggregate": r.aggregate.to_json_obj() if r.aggregate else None,
                "valence": _fmt(r.valence) if r.valence is not None else None,
            }
            for r in records
        ],
        "ranking": [
            {
                "requirement_id": r.requirement_id,
                "priority_score": _fmt(r.priority_score),
                "rank": r.rank,
            }
            for r in ranking
        ],
        "alerts": [
            {
                "session_id": a.session_id,
                "t_start": _fmt(a.t_start),
                "t_end": _fmt(a.t_end),
                "kind": a.kind,
                "trigger_labels": list(a.trigger_labels),
                "mean_valence": _fmt(a.mean_valence),
                "segment_ids": list(a.segment_ids),
            }
            for a in alerts
        ],
    }


def render_report_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def render_report_markdown(report: dict) -> str:
    lines: list[str] = []
    sess = report["session"]
    lines.append(f"# Session report: {sess.get('name', sess.get('session_id', ''))}")
    lines.append("")
    for key in sorted(sess):
        lines.append(f"- **{key}**: {sess[key]}")
    lines.append("")
    lines.append("## Emotion timeline")
    lines.append("")
    lines.append("| segment | window | dominant |")
    lines.append("|---|---|---|")
    for row in report["timeline"]:
        lines.append(
            f"| {row['segment_id']} | {row['t_start']}–{row['t_end']} s | {row['dominant']} |"
        )
    lines.append("")
    lines.append("## Requirements")
    lines.append("")
    lines.append("| requirement | evidence | valence | rank |")
    lines.append("|---|---|---|---|")
    rank_by_id = {r["requirement_id"]: r["rank"] for r in report["ranking"]}
    for rec in report["requirements"]:
        val = rec["valence"] if rec["valence"] is not None else "–"
        rank = rank_by_id.get(rec["requirement_id"], "–")
        lines.append(
            f"| {rec['requirement_id']} | {rec['evidence_count']} | {val} | {rank} |"
        )
    lines.append("")
    lines.append("## Alerts")
    lines.append("")
    if report["alerts"]:
        for a in report["alerts"]:
            lines.append(
                f"- {a['kind']} over segments {a['segment_ids'][0]}–{a['segment_ids'][-1]}"
                f" ({a['t_start']}–{a['t_end']} s), mean valence {a['mean_valence']}"
            )
    else:
        lines.append("No alerts.")
    lines.append("")
    return "\n".join(lines)
