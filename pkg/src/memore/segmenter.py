"""Turn timed media streams into MediaSegments: fixed or conversational windows,
frame-rate normalization, and clip-store persistence."""

from __future__ import annotations

import io
import json
import wave
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from .core import MediaSegment, Modality, SegmentationMode

DEFAULT_TARGET_FPS = 24.0
DEFAULT_TAIL_S = 3.0
ALLOWED_SAMPLE_RATES = (16000, 44100, 48000)
SENTENCE_FINAL = (".", "?", "!")


class EmptyStreamError(ValueError):
    """No frames to resample."""


class NoTranscriptError(ValueError):
    """Conversational segmentation needs at least one transcript span."""


class EmptyWindowError(ValueError):
    """A cut window contained no payload in any modality."""


@dataclass(frozen=True)
class TimedFrame:
    t: float
    pixels: bytes  # grayscale or RGB raw bytes, row-major
    width: int
    height: int

    def __post_init__(self) -> None:
        if self.t < 0:
            raise ValueError("frame timestamp must be nonnegative")


@dataclass(frozen=True)
class AudioBlock:
    t_start: float
    samples: bytes  # signed 16-bit PCM, mono, little-endian
    sample_rate: int

    def __post_init__(self) -> None:
        if self.sample_rate not in ALLOWED_SAMPLE_RATES:
            raise ValueError(f"unsupported sample rate {self.sample_rate}")

    @property
    def duration(self) -> float:
        return len(self.samples) / 2 / self.sample_rate

    @property
    def t_end(self) -> float:
        return self.t_start + self.duration


@dataclass(frozen=True)
class TranscriptSpan:
    t_start: float
    t_end: float
    text: str

    def __post_init__(self) -> None:
        if self.t_end < self.t_start:
            raise ValueError("span t_end must be >= t_start")


@dataclass(frozen=True)
class SegmenterConfig:
    mode: SegmentationMode = SegmentationMode.FIXED
    length_s: float = 10.0
    min_tail_s: float = DEFAULT_TAIL_S
    target_fps: float = DEFAULT_TARGET_FPS
    pause_threshold_s: float = 1.0
    max_segment_s: float = 60.0

    def __post_init__(self) -> None:
        if not 1.0 <= self.length_s <= 300.0:
            raise ValueError(f"length_s must be in [1, 300], got {self.length_s}")
        if not self.min_tail_s < self.length_s:
            raise ValueError("min_tail_s must be smaller than length_s")
        if self.target_fps <= 0:
            raise ValueError("target_fps must be positive")


def resample_frames(
    frames: Sequence[TimedFrame], target_fps: float
) -> list[TimedFrame]:
    """Re-time frames onto the grid k/target_fps, picking the nearest input frame.

    Ties go to the earlier frame; the grid never extends past the last input
    timestamp.
    """
    if not frames:
        raise EmptyStreamError("no frames")
    t_last = frames[-1].t
    out: list[TimedFrame] = []
    idx = 0
    k = 0
    while True:
        t_grid = k / target_fps
        if t_grid > t_last:
            break
        # frames are time-ordered; advance while the next frame is strictly closer
        while idx + 1 < len(frames) and abs(frames[idx + 1].t - t_grid) < abs(
            frames[idx].t - t_grid
        ):
            idx += 1
        src = frames[idx]
        out.append(TimedFrame(t=t_grid, pixels=src.pixels, width=src.width, height=src.height))
        k += 1
    return out


def segment_fixed(
    duration_s: float, length_s: float, min_tail_s: float = DEFAULT_TAIL_S
) -> list[tuple[float, float]]:
    """Tile [0, T) with consecutive windows of length_s; a final partial window
    is kept iff it is at least min_tail_s long."""
    if duration_s <= 0:
        raise ValueError("duration must be positive")
    windows: list[tuple[float, float]] = []
    t = 0.0
    n = 0
    while True:
        start = n * length_s
        end = start + length_s
        if end <= duration_s:
            windows.append((start, end))
            n += 1
            continue
        tail = duration_s - start
        if tail >= min_tail_s and tail > 0:
            windows.append((start, duration_s))
        break
    return windows


def segment_conversational(
    transcript: Sequence[TranscriptSpan],
    pause_threshold_s: float,
    max_segment_s: float,
) -> list[tuple[float, float]]:
    """Place boundaries at sentence-final punctuation and at pauses of at least
    pause_threshold_s; cap every segment at max_segment_s."""
    if not transcript:
        raise NoTranscriptError("empty transcript")
    t0 = transcript[0].t_start
    t_last = transcript[-1].t_end
    boundaries: list[float] = []
    for i, span in enumerate(transcript):
        stripped = span.text.rstrip()
        at_sentence_end = stripped.endswith(SENTENCE_FINAL)
        gap_follows = (
            i + 1 < len(transcript)
            and transcript[i + 1].t_start - span.t_end >= pause_threshold_s
        )
        if (at_sentence_end or gap_follows) and span.t_end < t_last:
            boundaries.append(span.t_end)
    coarse: list[tuple[float, float]] = []
    prev = t0
    for b in sorted(set(boundaries)):
        if b > prev:
            coarse.append((prev, b))
            prev = b
    if t_last > prev:
        coarse.append((prev, t_last))
    windows: list[tuple[float, float]] = []
    for start, end in coarse:
        t = start
        while end - t > max_segment_s:
            windows.append((t, t + max_segment_s))
            t += max_segment_s
        if end > t:
            windows.append((t, end))
    return windows


def _encode_png(frame: TimedFrame) -> bytes:
    from PIL import Image

    channels = len(frame.pixels) // (frame.width * frame.height)
    mode = {1: "L", 3: "RGB"}.get(channels)
    if mode is None:
        raise ValueError(f"cannot infer image mode for {channels} channels")
    img = Image.frombytes(mode, (frame.width, frame.height), frame.pixels)
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


class ClipStore:
    """Clip persistence: one directory per segment holding meta.json, numbered
    PNG frames, a PCM16 WAV file and a UTF-8 transcript."""

    def __init__(self, storage_dir: Path | str):
        self.root = Path(storage_dir)

    def segment_dir(self, session_id: str, segment_id: int) -> Path:
        return self.root / session_id / str(segment_id)

    def write_segment(
        self,
        session_id: str,
        segment_id: int,
        frames: Sequence[TimedFrame],
        audio: Sequence[AudioBlock],
        transcript_text: str,
        meta: dict,
    ) -> dict[Modality, str]:
        d = self.segment_dir(session_id, segment_id)
        d.mkdir(parents=True, exist_ok=True)
        refs: dict[Modality, str] = {}
        if frames:
            frames_dir = d / "frames"
            frames_dir.mkdir(exist_ok=True)
            for i, fr in enumerate(frames):
                (frames_dir / f"{i:06d}.png").write_bytes(_encode_png(fr))
            refs[Modality.VIDEO] = str(frames_dir)
        if audio:
            rate = audio[0].sample_rate
            wav_path = d / "audio.wav"
            with wave.open(str(wav_path), "wb") as w:
                w.setnchannels(1)
                w.setsampwidth(2)
                w.setframerate(rate)
                for blk in audio:
                    w.writeframes(blk.samples)
            refs[Modality.AUDIO] = str(wav_path)
        if transcript_text:
            txt_path = d / "transcript.txt"
            txt_path.write_text(transcript_text, encoding="utf-8")
            refs[Modality.TEXT] = str(txt_path)
        meta_out = dict(meta)
        meta_out["payload_refs"] = {m.value: ref for m, ref in sorted(refs.items())}
        meta_out["modalities_present"] = sorted(m.value for m in refs)
        (d / "meta.json").write_text(
            json.dumps(meta_out, sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )
        return refs


def cut_segment(
    window: tuple[float, float],
    session_id: str,
    segment_id: int,
    frames: Sequence[TimedFrame],
    audio: Sequence[AudioBlock],
    transcript: Sequence[TranscriptSpan],
    store: ClipStore,
    target_fps: float = DEFAULT_TARGET_FPS,
) -> MediaSegment:
    """Slice every modality to the window, persist payloads, and emit the segment.

    A window with no payload in any modality still yields a MediaSegment, with an
    empty modality set, so downstream ordering stays gapless.
    """
    t_start, t_end = window
    win_frames = [f for f in frames if t_start <= f.t < t_end]
    win_audio = [b for b in audio if b.t_start < t_end and b.t_end > t_start]
    win_spans = [s for s in transcript if s.t_start < t_end and s.t_end > t_start]
    text = "\n".join(s.text for s in win_spans)
    meta = {
        "segment_id": segment_id,
        "session_id": session_id,
        "t_start": round(t_start, 9),
        "t_end": round(t_end, 9),
        "frame_rate": target_fps if win_frames else None,
        "empty": not (win_frames or win_audio or text),
    }
    refs = store.write_segment(session_id, segment_id, win_frames, win_audio, text, meta)
    return MediaSegment(
        segment_id=segment_id,
        session_id=session_id,
        t_start=t_start,
        t_end=t_end,
        modalities_present=frozenset(refs),
        payload_refs=refs,
        frame_rate=target_fps if Modality.VIDEO in refs else None,
    )
