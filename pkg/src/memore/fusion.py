"""Late fusion of per-modality distributions into one fused distribution."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping

from .core import LABEL_ORDER, EmotionDistribution, EmotionLabel, Modality


class FusionRule(str, enum.Enum):
    LOGLINEAR = "loglinear"  # weighted geometric pooling
    LINEAR = "linear"  # weighted arithmetic pooling


DEFAULT_WEIGHTS: dict[Modality, float] = {
    Modality.VIDEO: 0.4,
    Modality.AUDIO: 0.4,
    Modality.TEXT: 0.2,
}


class NoModalitiesError(ValueError):
    pass


@dataclass(frozen=True)
class FusionConfig:
    weights: Mapping[Modality, float] = field(default_factory=lambda: dict(DEFAULT_WEIGHTS))
    epsilon: float = 1e-6
    rule: FusionRule = FusionRule.LOGLINEAR
    tie_break: tuple[EmotionLabel, ...] = LABEL_ORDER

    def __post_init__(self) -> None:
        if not any(w > 0 for w in self.weights.values()):
            raise ValueError("at least one fusion weight must be positive")
        if any(w < 0 for w in self.weights.values()):
            raise ValueError("fusion weights must be nonnegative")
        if not 0 < self.epsilon <= 1e-3:
            raise ValueError(f"epsilon must be in (0, 1e-3], got {self.epsilon}")


def _clamp_renorm(d: EmotionDistribution, epsilon: float) -> list[float]:
    vals = [max(d[l], epsilon) for l in LABEL_ORDER]
    total = sum(vals)
    return [v / total for v in vals]


def fuse(
    per_modality: Mapping[Modality, EmotionDistribution],
    cfg: FusionConfig | None = None,
) -> EmotionDistribution:
    """Pool the present modalities' distributions under the configured rule.

    Weights of present modalities are renormalized to sum 1; each input is
    floored at epsilon and renormalized before pooling so no single modality's
    zero can veto a label.
    """
    if cfg is None:
        cfg = FusionConfig()
    if not per_modality:
        raise NoModalitiesError("no modality distributions to fuse")
    weights = {m: cfg.weights.get(m, 0.0) for m in per_modality}
    w_total = sum(weights.values())
    if w_total == 0:
        # none of the present modalities carries configured weight; treat equally
        weights = {m: 1.0 for m in per_modality}
        w_total = float(len(per_modality))
    weights = {m: w / w_total for m, w in weights.items()}

    clamped = {m: _clamp_renorm(d, cfg.epsilon) for m, d in per_modality.items()}
    n = len(LABEL_ORDER)
    if cfg.rule is FusionRule.LOGLINEAR:
        log_mass = [0.0] * n
        for m, probs in clamped.items():
            w = weights[m]
            for i in range(n):
                log_mass[i] += w * math.log(probs[i])
        peak = max(log_mass)
        raw = [math.exp(x - peak) for x in log_mass]
    else:
        raw = [0.0] * n
        for m, probs in clamped.items():
            w = weights[m]
            for i in range(n):
                raw[i] += w * probs[i]
    total = sum(raw)
    return EmotionDistribution(tuple(v / total for v in raw))


def dominant(
    d: EmotionDistribution, tie_break: tuple[EmotionLabel, ...] = LABEL_ORDER
) -> EmotionLabel:
    """Argmax label; exact ties resolve by the fixed tie-break order."""
    return d.argmax(tie_break)
