from __future__ import annotations

import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import strategies as st

from memore.core import LABEL_ORDER, EmotionDistribution, EmotionLabel

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = Path(__file__).parent / "golden"


def dist(**mass: float) -> EmotionDistribution:
    """Build a distribution from partial label masses; the rest get zero."""
    full = {l: 0.0 for l in LABEL_ORDER}
    for name, v in mass.items():
        full[EmotionLabel(name)] = v
    total = sum(full.values())
    return EmotionDistribution(tuple(full[l] / total for l in LABEL_ORDER))


@st.composite
def distributions(draw, min_mass: float = 1e-9):
    raw = draw(
        st.lists(
            st.floats(min_value=0.0, max_value=1.0, allow_nan=False),
            min_size=8,
            max_size=8,
        )
    )
    total = sum(raw)
    if total < min_mass:
        raw = [1.0] * 8
        total = 8.0
    return EmotionDistribution(tuple(v / total for v in raw))


def assert_close(a: float, b: float, tol: float = 1e-9) -> None:
    assert math.isclose(a, b, rel_tol=0, abs_tol=tol), f"{a} != {b} (tol {tol})"


def make_sine(duration_s: float, sample_rate: int = 16000, freq: float = 440.0,
              amplitude: float = 0.5) -> np.ndarray:
    t = np.arange(int(duration_s * sample_rate)) / sample_rate
    return (amplitude * 32767 * np.sin(2 * np.pi * freq * t)).astype(np.int16)


ANGRY_TEXT = "furious angry rage irritated hostile livid enraged irate"
HAPPY_TEXT = "this is wonderful and amazing, I love it"
NEUTRAL_TEXT = "we then discussed the schedule for next week"


def build_fixture_source(duration_s: float = 480.0, angry_window=(200.0, 250.0)):
    """Deterministic synthetic interview: sine audio with a silence gap over the
    angry window (so those segments are text-only and strongly negative),
    transcripts every 10 s, and a sparse low-rate frame track."""
    from memore.segmenter import AudioBlock, TimedFrame, TranscriptSpan
    from memore.service import IngestSource

    a0, a1 = angry_window
    audio = [
        AudioBlock(0.0, make_sine(a0).tobytes(), 16000),
        AudioBlock(a1, make_sine(duration_s - a1).tobytes(), 16000),
    ]
    spans = []
    t = 0.0
    while t < duration_s:
        if a0 <= t < a1:
            text = ANGRY_TEXT
        elif int(t) % 30 == 0:
            text = HAPPY_TEXT
        else:
            text = NEUTRAL_TEXT
        spans.append(TranscriptSpan(t + 1.0, t + 9.0, text))
        t += 10.0
    frames = [
        TimedFrame(t=float(k), pixels=bytes([k % 256] * 4), width=2, height=2)
        for k in range(int(duration_s))
    ]
    return IngestSource(frames=tuple(frames), audio=tuple(audio), transcript=tuple(spans))
