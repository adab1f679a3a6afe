"""Per-modality emotion scorers: deterministic reference recognizers, a playback
recognizer for oracle-exact tests, and the HTTP client for remote model servers."""

from __future__ import annotations

import enum
import json
import re
import time
import wave
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from .core import (
    LABEL_ORDER,
    EmotionDistribution,
    EmotionLabel,
    MediaSegment,
    Modality,
    ModalityScore,
    normalize,
)
from .protocol import (
    PROTOCOL_VERSION,
    ProtocolViolation,
    parse_response_distributions,
    validate_score_request,
)

LAPLACE = 0.125  # smoothing per label; uniform is the no-evidence limit
MIN_AUDIO_S = 0.5

_TOKEN_RE = re.compile(r"[a-z']+")


class RecognizerKind(str, enum.Enum):
    REFERENCE = "reference"
    PLAYBACK = "playback"
    REMOTE = "remote"


@dataclass(frozen=True)
class RecognizerDescriptor:
    model_id: str
    modalities_required: frozenset[Modality]
    kind: RecognizerKind
    endpoint: Optional[str] = None

    def __post_init__(self) -> None:
        if not self.modalities_required:
            raise ValueError("modalities_required must be nonempty")
        if self.kind is RecognizerKind.REMOTE and not self.endpoint:
            raise ValueError("remote recognizer needs an endpoint")


class UnsupportedModalityError(ValueError):
    pass


class PayloadUnreadableError(RuntimeError):
    pass


class TooShortError(ValueError):
    """Audio clip shorter than the scoring minimum."""


class RemoteUnavailableError(RuntimeError):
    """Remote endpoint failed after the retry policy."""


# --- text: lexicon counting ------------------------------------------------

def _bundled_lexicon_path() -> Path:
    return Path(__file__).parent / "data" / "lexicon.tsv"


def load_lexicon(path: Path | str | None = None) -> dict[str, dict[EmotionLabel, int]]:
    """Lexicon TSV: token column plus one count column per label."""
    p = Path(path) if path else _bundled_lexicon_path()
    lines = p.read_text(encoding="utf-8").splitlines()
    header = lines[0].split("\t")
    labels = [EmotionLabel(h) for h in header[1:]]
    lex: dict[str, dict[EmotionLabel, int]] = {}
    for line in lines[1:]:
        if not line.strip():
            continue
        parts = line.split("\t")
        lex[parts[0]] = {l: int(c) for l, c in zip(labels, parts[1:])}
    return lex


def reference_text_score(
    text: str, lexicon: Mapping[str, Mapping[EmotionLabel, int]] | None = None
) -> EmotionDistribution:
    """Count lexicon hits per label over lowercased tokens, Laplace-smooth by
    0.125 per label, and normalize. Zero hits yields the uniform distribution."""
    if lexicon is None:
        lexicon = _DEFAULT_LEXICON
    counts = {l: 0.0 for l in LABEL_ORDER}
    for token in _TOKEN_RE.findall(text.lower()):
        entry = lexicon.get(token)
        if entry:
            for label, c in entry.items():
                counts[label] += c
    smoothed = {l: counts[l] + LAPLACE for l in LABEL_ORDER}
    return normalize(smoothed)


_DEFAULT_LEXICON = load_lexicon()


# --- audio: RMS / zero-crossing arousal buckets ----------------------------

class ArousalBucket(str, enum.Enum):
    LOW = "low"
    MID = "mid"
    HIGH = "high"


# RMS is normalized to full scale (32768); ZCR is crossings per sample.
RMS_LOW_MAX = 0.02
RMS_HIGH_MIN = 0.35
RMS_HIGH_WITH_ZCR_MIN = 0.15
ZCR_HIGH_MIN = 0.25

BUCKET_PRIORS: dict[ArousalBucket, dict[EmotionLabel, float]] = {
    ArousalBucket.LOW: {
        EmotionLabel.JOY: 0.10,
        EmotionLabel.SADNESS: 0.20,
        EmotionLabel.ANGER: 0.05,
        EmotionLabel.ANTICIPATION: 0.15,
        EmotionLabel.DISGUST: 0.05,
        EmotionLabel.FEAR: 0.10,
        EmotionLabel.TRUST: 0.25,
        EmotionLabel.SURPRISE: 0.10,
    },
    ArousalBucket.MID: {
        EmotionLabel.JOY: 0.20,
        EmotionLabel.SADNESS: 0.15,
        EmotionLabel.ANGER: 0.10,
        EmotionLabel.ANTICIPATION: 0.20,
        EmotionLabel.DISGUST: 0.05,
        EmotionLabel.FEAR: 0.05,
        EmotionLabel.TRUST: 0.15,
        EmotionLabel.SURPRISE: 0.10,
    },
    ArousalBucket.HIGH: {
        EmotionLabel.JOY: 0.20,
        EmotionLabel.SADNESS: 0.05,
        EmotionLabel.ANGER: 0.25,
        EmotionLabel.ANTICIPATION: 0.10,
        EmotionLabel.DISGUST: 0.03,
        EmotionLabel.FEAR: 0.15,
        EmotionLabel.TRUST: 0.02,
        EmotionLabel.SURPRISE: 0.20,
    },
}


def audio_features(samples: np.ndarray) -> tuple[float, float]:
    """(normalized RMS, zero-crossing rate) for int16 mono samples."""
    x = samples.astype(np.float64) / 32768.0
    rms = float(np.sqrt(np.mean(x * x))) if len(x) else 0.0
    if len(x) < 2:
        zcr = 0.0
    else:
        signs = np.signbit(x)
        zcr = float(np.count_nonzero(signs[1:] != signs[:-1])) / (len(x) - 1)
    return rms, zcr


def arousal_bucket(rms: float, zcr: float) -> ArousalBucket:
    if rms < RMS_LOW_MAX:
        return ArousalBucket.LOW
    if rms >= RMS_HIGH_MIN or (rms >= RMS_HIGH_WITH_ZCR_MIN and zcr >= ZCR_HIGH_MIN):
        return ArousalBucket.HIGH
    return ArousalBucket.MID


def reference_audio_score(samples: np.ndarray, sample_rate: int) -> EmotionDistribution:
    """Map clip-level RMS/ZCR to an arousal bucket and emit that bucket's prior."""
    if len(samples) < MIN_AUDIO_S * sample_rate:
        raise TooShortError(f"need at least {MIN_AUDIO_S}s of audio")
    rms, zcr = audio_features(samples)
    bucket = arousal_bucket(rms, zcr)
    return EmotionDistribution.from_mapping(BUCKET_PRIORS[bucket])


def read_wav(path: Path | str) -> tuple[np.ndarray, int]:
    try:
        with wave.open(str(path), "rb") as w:
            rate = w.getframerate()
            raw = w.readframes(w.getnframes())
    except (OSError, wave.Error) as e:
        raise PayloadUnreadableError(f"cannot read wav {path}: {e}") from e
    return np.frombuffer(raw, dtype=np.int16), rate


# --- recognizer implementations --------------------------------------------

class ReferenceRecognizer:
    """Deterministic audio/text scorer backed by the bundled lexicon and the
    arousal bucket table. Pure function of payload bytes."""

    model_id = "reference-v1"

    def __init__(self, lexicon_path: Path | str | None = None):
        self._lexicon = load_lexicon(lexicon_path) if lexicon_path else _DEFAULT_LEXICON

    @property
    def modalities(self) -> frozenset[Modality]:
        return frozenset({Modality.AUDIO, Modality.TEXT})

    def score(self, segment: MediaSegment, modality: Modality) -> ModalityScore:
        if modality not in segment.modalities_present:
            raise UnsupportedModalityError(f"segment has no {modality.value} payload")
        ref = segment.payload_refs[modality]
        if modality is Modality.TEXT:
            try:
                text = Path(ref).read_text(encoding="utf-8")
            except OSError as e:
                raise PayloadUnreadableError(str(e)) from e
            return ModalityScore(reference_text_score(text, self._lexicon), self.model_id)
        if modality is Modality.AUDIO:
            samples, rate = read_wav(ref)
            return ModalityScore(reference_audio_score(samples, rate), self.model_id)
        raise UnsupportedModalityError(f"reference recognizer cannot score {modality.value}")


class PlaybackRecognizer:
    """Replays pre-scored distributions from a manifest keyed by
    "<session_id>/<segment_id>" or by clip path."""

    model_id = "playback-v1"

    def __init__(self, entries: Mapping[str, Mapping[str, EmotionDistribution]]):
        self.entries = dict(entries)

    @classmethod
    def from_file(cls, path: Path | str) -> "PlaybackRecognizer":
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        entries: dict[str, dict[str, EmotionDistribution]] = {}
        for key, per_modality in raw.items():
            entries[key] = {
                m: EmotionDistribution.from_json_obj(d) for m, d in per_modality.items()
            }
        return cls(entries)

    @property
    def modalities(self) -> frozenset[Modality]:
        return frozenset(Modality)

    def lookup(self, key: str, modality_name: str) -> EmotionDistribution:
        entry = self.entries.get(key)
        if entry is None or modality_name not in entry:
            raise KeyError(f"no playback entry for {key!r}/{modality_name}")
        return entry[modality_name]

    def score(self, segment: MediaSegment, modality: Modality) -> ModalityScore:
        if modality not in segment.modalities_present:
            raise UnsupportedModalityError(f"segment has no {modality.value} payload")
        key = f"{segment.session_id}/{segment.segment_id}"
        try:
            dist = self.lookup(key, modality.value)
        except KeyError:
            dist = self.lookup(segment.payload_refs[modality], modality.value)
        return ModalityScore(dist, self.model_id)


class RemoteRecognizer:
    """HTTP client speaking the inference wire protocol."""

    def __init__(
        self,
        endpoint: str,
        model_id: str = "remote",
        retries: int = 2,
        backoff_s: float = 0.25,
        timeout_s: float = 10.0,
    ):
        self.endpoint = endpoint.rstrip("/")
        self.model_id = model_id
        self.retries = retries
        self.backoff_s = backoff_s
        self.timeout_s = timeout_s

    def _post(self, payload: dict) -> dict:
        import httpx

        last_err: Exception | None = None
        for attempt in range(self.retries + 1):
            try:
                resp = httpx.post(
                    f"{self.endpoint}/v1/score", json=payload, timeout=self.timeout_s
                )
                resp.raise_for_status()
                return resp.json()
            except httpx.HTTPError as e:
                last_err = e
                if attempt < self.retries:
                    time.sleep(self.backoff_s)
        raise RemoteUnavailableError(f"{self.endpoint}: {last_err}")

    def build_request(self, segment: MediaSegment, modalities: Sequence[Modality]) -> dict:
        mods: dict[str, dict] = {}
        for m in modalities:
            ref = segment.payload_refs[m]
            if m is Modality.VIDEO:
                frames_dir = Path(ref)
                count = len(list(frames_dir.glob("*.png"))) if frames_dir.is_dir() else 0
                mods["video"] = {
                    "frames_uri": str(ref),
                    "frame_count": count,
                    "fps": segment.frame_rate or 24.0,
                }
            elif m is Modality.AUDIO:
                try:
                    with wave.open(str(ref), "rb") as w:
                        rate = w.getframerate()
                except (OSError, wave.Error):
                    rate = 16000
                mods["audio"] = {"wav_uri": str(ref), "sample_rate": rate}
            elif m is Modality.TEXT:
                try:
                    content = Path(ref).read_text(encoding="utf-8")
                except OSError as e:
                    raise PayloadUnreadableError(str(e)) from e
                mods["text"] = {"content": content}
        req = {
            "protocol_version": PROTOCOL_VERSION,
            "session_id": segment.session_id,
            "segment_id": segment.segment_id,
            "modalities": mods,
        }
        validate_score_request(req)
        return req

    def remote_score(
        self, segment: MediaSegment, modalities: Sequence[Modality]
    ) -> dict[str, ModalityScore]:
        """Score the requested modalities in one round trip. The response may
        carry a joint "audiovisual" distribution instead of per-modality ones."""
        for m in modalities:
            if m not in segment.modalities_present:
                raise UnsupportedModalityError(f"segment has no {m.value} payload")
        req = self.build_request(segment, modalities)
        resp = self._post(req)
        dists = parse_response_distributions(resp)
        model_id = resp["model_id"]
        return {name: ModalityScore(dist, model_id) for name, dist in dists.items()}

    def score(self, segment: MediaSegment, modality: Modality) -> ModalityScore:
        result = self.remote_score(segment, [modality])
        if modality.value not in result:
            raise ProtocolViolation(
                f"response missing distribution for {modality.value}",
                error_code="missing_modality",
            )
        return result[modality.value]
