"""MEmoRE: multi-modal emotion recognition platform for requirements elicitation."""

from .core import (
    EmotionDistribution,
    EmotionLabel,
    MediaSegment,
    Modality,
    RequirementTag,
    SegmentScore,
    ValenceMap,
    normalize,
    valence_score,
)
from .fusion import FusionConfig, FusionRule, dominant, fuse

__all__ = [
    "EmotionDistribution",
    "EmotionLabel",
    "MediaSegment",
    "Modality",
    "RequirementTag",
    "SegmentScore",
    "ValenceMap",
    "normalize",
    "valence_score",
    "FusionConfig",
    "FusionRule",
    "dominant",
    "fuse",
]

__version__ = "0.1.0"
