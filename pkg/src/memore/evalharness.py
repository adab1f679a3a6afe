"""Desk-scale evaluation: segment-length accuracy sweep and per-emotion recall
over labeled manifests, with integer-exact counting."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Optional, Sequence

from .core import EmotionDistribution, EmotionLabel
from .fusion import FusionConfig, dominant, fuse
from .segmenter import segment_fixed

DEFAULT_LENGTHS = (6.0, 10.0, 15.0, 30.0, 60.0)

# MELD labels → taxonomy; neutral has no slot in the 8-label set and is dropped
DEFAULT_LABEL_MAP: dict[str, Optional[EmotionLabel]] = {
    "anger": EmotionLabel.ANGER,
    "disgust": EmotionLabel.DISGUST,
    "fear": EmotionLabel.FEAR,
    "joy": EmotionLabel.JOY,
    "sadness": EmotionLabel.SADNESS,
    "surprise": EmotionLabel.SURPRISE,
    "neutral": None,
}


class NoGroundTruthError(ValueError):
    pass


class EmptyAfterMappingError(ValueError):
    pass


@dataclass(frozen=True)
class ManifestRow:
    clip_key: str
    label: str
    duration_s: float
    split: str


def load_manifest(path: Path | str) -> list[ManifestRow]:
    rows: list[ManifestRow] = []
    seen: set[str] = set()
    with open(path, newline="", encoding="utf-8") as f:
        for rec in csv.DictReader(f):
            key = rec["clip_key"]
            if key in seen:
                raise ValueError(f"duplicate clip_key {key!r}")
            seen.add(key)
            rows.append(
                ManifestRow(key, rec["label"], float(rec["duration_s"]), rec.get("split", ""))
            )
    return rows


@dataclass(frozen=True)
class LengthResult:
    length_s: float
    segments_total: int
    segments_correct: int

    @property
    def accuracy(self) -> float:
        return self.segments_correct / self.segments_total if self.segments_total else 0.0


@dataclass(frozen=True)
class SweepResult:
    per_length: tuple[LengthResult, ...]
    best_length: float


GroundTruth = Sequence[tuple[float, float, EmotionLabel]]  # (t_start, t_end, label)
SegmentScorer = Callable[[float, int, tuple[float, float]], Mapping[str, EmotionDistribution]]


def majority_label(window: tuple[float, float], truth: GroundTruth) -> EmotionLabel:
    """Ground-truth label covering the majority of the window; an exact 50/50
    tie goes to the earlier interval's label."""
    overlaps: list[tuple[float, float, EmotionLabel]] = []
    for t0, t1, label in truth:
        ov = min(window[1], t1) - max(window[0], t0)
        if ov > 0:
            overlaps.append((ov, t0, label))
    if not overlaps:
        raise NoGroundTruthError(f"no ground truth covers window {window}")
    best = max(ov for ov, _, _ in overlaps)
    winners = [(t0, label) for ov, t0, label in overlaps if ov == best]
    winners.sort(key=lambda t: t[0])
    return winners[0][1]


def run_sweep(
    duration_s: float,
    truth: GroundTruth,
    scorer: SegmentScorer,
    lengths: Sequence[float] = DEFAULT_LENGTHS,
    min_tail_s: float = 3.0,
    fusion_cfg: FusionConfig | None = None,
) -> SweepResult:
    """For each segment length: segment, score, fuse, and compare the dominant
    label against the majority-overlap ground truth. Accuracy is per-segment."""
    if not lengths:
        raise ValueError("lengths must be nonempty")
    if not truth:
        raise NoGroundTruthError("empty ground truth")
    cfg = fusion_cfg or FusionConfig()
    per_length: list[LengthResult] = []
    for L in lengths:
        windows = segment_fixed(duration_s, L, min_tail_s)
        correct = 0
        for seg_id, window in enumerate(windows):
            per_modality = scorer(L, seg_id, window)
            dists = {
                _as_modality(m): d for m, d in per_modality.items()
            }
            fused = fuse(dists, cfg)
            if dominant(fused, cfg.tie_break) == majority_label(window, truth):
                correct += 1
        per_length.append(LengthResult(L, len(windows), correct))
    best = max(per_length, key=lambda r: (r.accuracy, -r.length_s))
    return SweepResult(tuple(per_length), best.length_s)


def _as_modality(name: str):
    from .core import Modality

    return Modality(name)


@dataclass(frozen=True)
class ClassResult:
    label: EmotionLabel
    total: int
    correct: int

    @property
    def recall(self) -> float:
        return self.correct / self.total if self.total else 0.0


@dataclass(frozen=True)
class PerClassResult:
    per_label: tuple[ClassResult, ...]  # sorted by recall descending
    overall_total: int
    overall_correct: int

    @property
    def overall_accuracy(self) -> float:
        return self.overall_correct / self.overall_total if self.overall_total else 0.0


def run_per_class(
    manifest: Sequence[ManifestRow],
    predict: Callable[[str], EmotionLabel],
    label_map: Mapping[str, Optional[EmotionLabel]] | None = None,
) -> PerClassResult:
    """Per-label recall over a labeled clip manifest. Rows whose label maps to
    None are dropped from every numerator and denominator."""
    lmap = DEFAULT_LABEL_MAP if label_map is None else label_map
    totals: dict[EmotionLabel, int] = {}
    corrects: dict[EmotionLabel, int] = {}
    for row in manifest:
        mapped = lmap.get(row.label, None)
        if mapped is None:
            continue
        totals[mapped] = totals.get(mapped, 0) + 1
        if predict(row.clip_key) == mapped:
            corrects[mapped] = corrects.get(mapped, 0) + 1
    if not totals:
        raise EmptyAfterMappingError("no rows survive label mapping")
    results = [
        ClassResult(label, totals[label], corrects.get(label, 0))
        for label in sorted(totals, key=lambda l: l.value)
    ]
    results.sort(key=lambda r: (-r.recall, r.label.value))
    return PerClassResult(
        per_label=tuple(results),
        overall_total=sum(totals.values()),
        overall_correct=sum(corrects.values()),
    )


def export_sweep(result: SweepResult, out_dir: Path | str) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    obj = {
        "per_length": [
            {
                "length_s": r.length_s,
                "segments_total": r.segments_total,
                "segments_correct": r.segments_correct,
                "accuracy": f"{r.accuracy:.9g}",
            }
            for r in result.per_length
        ],
        "best_length": result.best_length,
    }
    (out / "results.json").write_text(
        json.dumps(obj, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    lines = ["length_s,segments_total,segments_correct,accuracy"]
    for r in result.per_length:
        lines.append(
            f"{r.length_s:g},{r.segments_total},{r.segments_correct},{r.accuracy:.9g}"
        )
    (out / "results.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")


def export_per_class(result: PerClassResult, out_dir: Path | str) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    obj = {
        "per_label": [
            {
                "label": r.label.value,
                "total": r.total,
                "correct": r.correct,
                "recall": f"{r.recall:.9g}",
            }
            for r in result.per_label
        ],
        "overall_total": result.overall_total,
        "overall_correct": result.overall_correct,
        "overall_accuracy": f"{result.overall_accuracy:.9g}",
    }
    (out / "results.json").write_text(
        json.dumps(obj, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    lines = ["label,total,correct,recall"]
    for r in result.per_label:
        lines.append(f"{r.label.value},{r.total},{r.correct},{r.recall:.9g}")
    (out / "results.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
