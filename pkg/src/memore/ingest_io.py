"""File-based ingestion adapters: frame directories, WAV files, transcript files."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .segmenter import AudioBlock, TimedFrame, TranscriptSpan


def read_frames_dir(path: Path | str, fps: float) -> tuple[TimedFrame, ...]:
    """Read numbered image files from a directory as a frame stream at fps."""
    from PIL import Image

    files = sorted(
        p for p in Path(path).iterdir() if p.suffix.lower() in (".png", ".jpg", ".jpeg")
    )
    frames = []
    for i, p in enumerate(files):
        img = Image.open(p)
        if img.mode not in ("L", "RGB"):
            img = img.convert("RGB")
        frames.append(
            TimedFrame(t=i / fps, pixels=img.tobytes(), width=img.width, height=img.height)
        )
    return tuple(frames)


def read_wav_block(path: Path | str, t_start: float = 0.0) -> AudioBlock:
    from .recognizers import read_wav

    samples, rate = read_wav(path)
    return AudioBlock(
        t_start=t_start, samples=samples.astype(np.int16).tobytes(), sample_rate=rate
    )


def read_transcript_file(path: Path | str) -> tuple[TranscriptSpan, ...]:
    """Transcript text file: one span per line, tab-separated t_start, t_end, text."""
    spans = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t", 2)
        if len(parts) != 3:
            raise ValueError(f"bad transcript line (want t_start<TAB>t_end<TAB>text): {line!r}")
        spans.append(TranscriptSpan(float(parts[0]), float(parts[1]), parts[2]))
    return tuple(spans)
