"""Shared domain vocabulary: emotion taxonomy, distributions, valence, session records."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

SUM_TOLERANCE = 1e-9


class EmotionLabel(str, enum.Enum):
    """The closed 8-label emotion taxonomy. Order matters: it is the tie-break order."""

    JOY = "joy"
    SADNESS = "sadness"
    ANGER = "anger"
    ANTICIPATION = "anticipation"
    DISGUST = "disgust"
    FEAR = "fear"
    TRUST = "trust"
    SURPRISE = "surprise"


LABEL_ORDER: tuple[EmotionLabel, ...] = tuple(EmotionLabel)
assert len(LABEL_ORDER) == 8


class Modality(str, enum.Enum):
    VIDEO = "video"
    AUDIO = "audio"
    TEXT = "text"


# Reserved modality name for future wearable/physiological sources; not a member of
# Modality on purpose so no code path can route to it yet.
PHYSIOLOGICAL_RESERVED = "physiological"


class AllZeroError(ValueError):
    """Raised when a raw score vector has no mass to normalize."""


def _fmt(x: float) -> float:
    # 9 significant digits for stable serialization
    return float(f"{x:.9g}")


@dataclass(frozen=True)
class EmotionDistribution:
    """Probability mass over the 8 labels. Immutable; validated on construction."""

    _values: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self._values) != len(LABEL_ORDER):
            raise ValueError(f"expected {len(LABEL_ORDER)} entries, got {len(self._values)}")
        for v in self._values:
            if not (v >= 0.0):  # also rejects NaN
                raise ValueError(f"negative or NaN probability: {v}")
        total = sum(self._values)
        if abs(total - 1.0) > SUM_TOLERANCE:
            raise ValueError(f"probabilities sum to {total}, not 1")

    @classmethod
    def from_mapping(cls, mass: Mapping[EmotionLabel, float]) -> "EmotionDistribution":
        missing = [l for l in LABEL_ORDER if l not in mass]
        if missing:
            raise ValueError(f"missing labels: {[l.value for l in missing]}")
        return cls(tuple(float(mass[l]) for l in LABEL_ORDER))

    @classmethod
    def uniform(cls) -> "EmotionDistribution":
        n = len(LABEL_ORDER)
        return cls(tuple(1.0 / n for _ in LABEL_ORDER))

    def __getitem__(self, label: EmotionLabel) -> float:
        return self._values[LABEL_ORDER.index(label)]

    def as_dict(self) -> dict[EmotionLabel, float]:
        return dict(zip(LABEL_ORDER, self._values))

    def argmax(self, tie_break: tuple[EmotionLabel, ...] = LABEL_ORDER) -> EmotionLabel:
        best = max(self._values)
        for label in tie_break:
            if self[label] == best:
                return label
        raise AssertionError("unreachable: max not found")

    def to_json_obj(self) -> dict[str, float]:
        # 9-significant-digit values, with the rounding residual folded into the
        # largest entry so the serialized form still sums to 1 within tolerance
        rounded = [_fmt(v) for v in self._values]
        residual = 1.0 - sum(rounded)
        top = rounded.index(max(rounded))
        rounded[top] += residual
        return {l.value: v for l, v in zip(LABEL_ORDER, rounded)}

    @classmethod
    def from_json_obj(cls, obj: Mapping[str, float]) -> "EmotionDistribution":
        extra = set(obj) - {l.value for l in LABEL_ORDER}
        if extra:
            raise ValueError(f"unknown labels: {sorted(extra)}")
        return cls.from_mapping({l: float(obj[l.value]) for l in LABEL_ORDER})


def normalize(raw: Mapping[EmotionLabel, float]) -> EmotionDistribution:
    """Normalize nonnegative per-label scores into a distribution.

    Raises AllZeroError when every score is zero; the caller must supply a prior.
    """
    missing = [l for l in LABEL_ORDER if l not in raw]
    if missing:
        raise ValueError(f"missing labels: {[l.value for l in missing]}")
    values = [float(raw[l]) for l in LABEL_ORDER]
    for v in values:
        if not (v >= 0.0):
            raise ValueError(f"negative or NaN score: {v}")
    total = sum(values)
    if total == 0.0:
        raise AllZeroError("all scores are zero")
    return EmotionDistribution(tuple(v / total for v in values))


DEFAULT_VALENCE: dict[EmotionLabel, float] = {
    EmotionLabel.JOY: 1.0,
    EmotionLabel.TRUST: 1.0,
    EmotionLabel.ANTICIPATION: 1.0,
    EmotionLabel.SURPRISE: 0.0,
    EmotionLabel.SADNESS: -1.0,
    EmotionLabel.ANGER: -1.0,
    EmotionLabel.DISGUST: -1.0,
    EmotionLabel.FEAR: -1.0,
}


@dataclass(frozen=True)
class ValenceMap:
    """Signed positivity weight per label, each in [-1, +1]."""

    weights: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.weights) != len(LABEL_ORDER):
            raise ValueError("valence map must cover all 8 labels")
        for w in self.weights:
            if not (-1.0 <= w <= 1.0):
                raise ValueError(f"valence weight out of [-1, 1]: {w}")

    @classmethod
    def from_mapping(cls, m: Mapping[EmotionLabel, float]) -> "ValenceMap":
        return cls(tuple(float(m[l]) for l in LABEL_ORDER))

    @classmethod
    def default(cls) -> "ValenceMap":
        return cls.from_mapping(DEFAULT_VALENCE)

    def __getitem__(self, label: EmotionLabel) -> float:
        return self.weights[LABEL_ORDER.index(label)]

    def to_json_obj(self) -> dict[str, float]:
        return {l.value: _fmt(w) for l, w in zip(LABEL_ORDER, self.weights)}


def valence_score(d: EmotionDistribution, v: ValenceMap) -> float:
    """Expected valence of a distribution: sum of d[label] * v[label]."""
    return sum(d[l] * v[l] for l in LABEL_ORDER)


@dataclass(frozen=True)
class MediaSegment:
    """A clipped time window of session media; the unit of scoring."""

    segment_id: int
    session_id: str
    t_start: float
    t_end: float
    modalities_present: frozenset[Modality]
    payload_refs: Mapping[Modality, str]
    frame_rate: Optional[float] = None

    def __post_init__(self) -> None:
        if not self.t_end > self.t_start:
            raise ValueError(f"t_end {self.t_end} must exceed t_start {self.t_start}")
        if set(self.payload_refs) != set(self.modalities_present):
            raise ValueError("payload_refs keys must equal modalities_present")

    def to_json_obj(self) -> dict:
        obj = {
            "segment_id": self.segment_id,
            "session_id": self.session_id,
            "t_start": _fmt(self.t_start),
            "t_end": _fmt(self.t_end),
            "modalities_present": sorted(m.value for m in self.modalities_present),
            "payload_refs": {m.value: ref for m, ref in sorted(self.payload_refs.items())},
        }
        if self.frame_rate is not None:
            obj["frame_rate"] = _fmt(self.frame_rate)
        return obj

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> "MediaSegment":
        return cls(
            segment_id=int(obj["segment_id"]),
            session_id=str(obj["session_id"]),
            t_start=float(obj["t_start"]),
            t_end=float(obj["t_end"]),
            modalities_present=frozenset(Modality(m) for m in obj["modalities_present"]),
            payload_refs={Modality(m): ref for m, ref in obj["payload_refs"].items()},
            frame_rate=float(obj["frame_rate"]) if "frame_rate" in obj else None,
        )


@dataclass(frozen=True)
class ModalityScore:
    distribution: EmotionDistribution
    model_id: str


@dataclass(frozen=True)
class SegmentScore:
    """Per-modality and fused distributions for one scored segment."""

    segment_id: int
    per_modality: Mapping[Modality, ModalityScore]
    fused: EmotionDistribution
    dominant: EmotionLabel
    latency_ms: float
    failures: Mapping[Modality, str] = field(default_factory=dict)

    def to_json_obj(self) -> dict:
        return {
            "segment_id": self.segment_id,
            "per_modality": {
                m.value: {
                    "distribution": s.distribution.to_json_obj(),
                    "model_id": s.model_id,
                }
                for m, s in sorted(self.per_modality.items())
            },
            "fused": self.fused.to_json_obj(),
            "dominant": self.dominant.value,
            "latency_ms": _fmt(self.latency_ms),
            "failures": {m.value: msg for m, msg in sorted(self.failures.items())},
        }

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> "SegmentScore":
        return cls(
            segment_id=int(obj["segment_id"]),
            per_modality={
                Modality(m): ModalityScore(
                    EmotionDistribution.from_json_obj(s["distribution"]), s["model_id"]
                )
                for m, s in obj["per_modality"].items()
            },
            fused=EmotionDistribution.from_json_obj(obj["fused"]),
            dominant=EmotionLabel(obj["dominant"]),
            latency_ms=float(obj["latency_ms"]),
            failures={Modality(m): msg for m, msg in obj.get("failures", {}).items()},
        )


@dataclass(frozen=True)
class RequirementTag:
    """Interviewer-entered interval marking which requirement was under discussion."""

    requirement_id: str
    label: str
    t_start: float
    t_end: Optional[float] = None  # open tag: still under discussion

    def __post_init__(self) -> None:
        if not self.requirement_id or len(self.requirement_id) > 128:
            raise ValueError("requirement_id must be nonempty and at most 128 chars")
        if self.t_end is not None and not self.t_end > self.t_start:
            raise ValueError("t_end must exceed t_start")

    def to_json_obj(self) -> dict:
        obj = {
            "requirement_id": self.requirement_id,
            "label": self.label,
            "t_start": _fmt(self.t_start),
        }
        if self.t_end is not None:
            obj["t_end"] = _fmt(self.t_end)
        return obj

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> "RequirementTag":
        return cls(
            requirement_id=obj["requirement_id"],
            label=obj.get("label", ""),
            t_start=float(obj["t_start"]),
            t_end=float(obj["t_end"]) if "t_end" in obj else None,
        )


class SegmentationMode(str, enum.Enum):
    FIXED = "fixed"
    CONVERSATIONAL = "conversational"
