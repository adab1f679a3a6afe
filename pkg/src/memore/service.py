"""Process entry points: config, append-only event log, and the session pipeline
that drives segmenter -> router -> fusion -> analytics."""

from __future__ import annotations

import json
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping, Optional, Sequence

from . import analytics
from .core import (
    MediaSegment,
    _fmt,
    Modality,
    RequirementTag,
    SegmentScore,
    SegmentationMode,
    ValenceMap,
)
from .fusion import DEFAULT_WEIGHTS, FusionConfig, FusionRule
from .recognizers import (
    PlaybackRecognizer,
    RecognizerKind,
    ReferenceRecognizer,
    RemoteRecognizer,
)
from .router import (
    DEFAULT_IN_FLIGHT_LIMIT,
    FailedScore,
    NoRouteError,
    ReorderBuffer,
    ScoringFailed,
    ServerRegistry,
    dispatch_and_collect,
    route,
)
from .segmenter import (
    AudioBlock,
    ClipStore,
    SegmenterConfig,
    TimedFrame,
    TranscriptSpan,
    cut_segment,
    segment_conversational,
    segment_fixed,
    NoTranscriptError,
)


class ConfigError(ValueError):
    pass


class SessionClosedError(RuntimeError):
    pass


class UnknownSessionError(KeyError):
    pass


class NoOpenTagError(ValueError):
    pass


class DuplicateOpenTagError(ValueError):
    pass


# --- configuration ----------------------------------------------------------

_KNOWN_KEYS = {
    "storage": {"dir"},
    "segmenter": {
        "mode",
        "length_s",
        "min_tail_s",
        "target_fps",
        "pause_threshold_s",
        "max_segment_s",
    },
    "fusion": {"rule", "weights", "epsilon"},
    "router": {"servers"},
    "analytics": {"alert_window_n", "alert_threshold", "valence"},
    "api": {"bind"},
}


@dataclass
class ServerConfig:
    model_id: str
    kind: RecognizerKind
    modalities: frozenset[Modality]
    endpoint: Optional[str] = None
    manifest: Optional[str] = None  # playback kind


@dataclass
class ServiceConfig:
    storage_dir: Path = Path("./memore-data")
    segmenter: SegmenterConfig = field(default_factory=SegmenterConfig)
    fusion: FusionConfig = field(default_factory=FusionConfig)
    servers: list[ServerConfig] = field(default_factory=list)
    alert_window_n: int = analytics.ALERT_WINDOW_N
    alert_threshold: float = analytics.ALERT_VALENCE_THRESHOLD
    valence_map: ValenceMap = field(default_factory=ValenceMap.default)
    bind: str = "127.0.0.1:8787"

    @classmethod
    def from_toml(cls, path: Path | str) -> "ServiceConfig":
        try:
            import tomllib  # type: ignore[import-not-found]
        except ModuleNotFoundError:
            import tomli as tomllib
        with open(path, "rb") as f:
            raw = tomllib.load(f)
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "ServiceConfig":
        for section, keys in raw.items():
            if section not in _KNOWN_KEYS:
                raise ConfigError(f"unknown config section: {section}")
            if isinstance(keys, Mapping):
                for k in keys:
                    if k not in _KNOWN_KEYS[section]:
                        raise ConfigError(f"unknown config key: {section}.{k}")
        cfg = cls()
        if "storage" in raw:
            cfg.storage_dir = Path(raw["storage"]["dir"])
        if "segmenter" in raw:
            s = raw["segmenter"]
            cfg.segmenter = SegmenterConfig(
                mode=SegmentationMode(s.get("mode", "fixed")),
                length_s=float(s.get("length_s", 10.0)),
                min_tail_s=float(s.get("min_tail_s", 3.0)),
                target_fps=float(s.get("target_fps", 24.0)),
                pause_threshold_s=float(s.get("pause_threshold_s", 1.0)),
                max_segment_s=float(s.get("max_segment_s", 60.0)),
            )
        if "fusion" in raw:
            fz = raw["fusion"]
            weights = dict(DEFAULT_WEIGHTS)
            for m, w in fz.get("weights", {}).items():
                weights[Modality(m)] = float(w)
            cfg.fusion = FusionConfig(
                weights=weights,
                epsilon=float(fz.get("epsilon", 1e-6)),
                rule=FusionRule(fz.get("rule", "loglinear")),
            )
        for srv in raw.get("router", {}).get("servers", []):
            cfg.servers.append(
                ServerConfig(
                    model_id=srv["model_id"],
                    kind=RecognizerKind(srv["kind"]),
                    modalities=frozenset(Modality(m) for m in srv["modalities"]),
                    endpoint=srv.get("endpoint"),
                    manifest=srv.get("manifest"),
                )
            )
        if "analytics" in raw:
            a = raw["analytics"]
            cfg.alert_window_n = int(a.get("alert_window_n", cfg.alert_window_n))
            cfg.alert_threshold = float(a.get("alert_threshold", cfg.alert_threshold))
            if "valence" in a:
                from .core import EmotionLabel, DEFAULT_VALENCE

                vm = dict(DEFAULT_VALENCE)
                for label, w in a["valence"].items():
                    vm[EmotionLabel(label)] = float(w)
                cfg.valence_map = ValenceMap.from_mapping(vm)
        if "api" in raw:
            cfg.bind = raw["api"].get("bind", cfg.bind)
        return cfg


def build_registry(cfg: ServiceConfig) -> ServerRegistry:
    registry = ServerRegistry()
    if not cfg.servers:
        # default: one reference server handling audio and text
        ref = ReferenceRecognizer()
        registry.register(
            ref.model_id,
            ref.modalities,
            lambda seg, mods, _r=ref: {
                m.value: _r.score(seg, m) for m in mods
            },
        )
        return registry
    for srv in cfg.servers:
        if srv.kind is RecognizerKind.REFERENCE:
            rec = ReferenceRecognizer()
        elif srv.kind is RecognizerKind.PLAYBACK:
            if not srv.manifest:
                raise ConfigError(f"playback server {srv.model_id} needs a manifest")
            rec = PlaybackRecognizer.from_file(srv.manifest)
        else:
            if not srv.endpoint:
                raise ConfigError(f"remote server {srv.model_id} needs an endpoint")
            remote = RemoteRecognizer(srv.endpoint, model_id=srv.model_id)
            registry.register(
                srv.model_id,
                srv.modalities,
                lambda seg, mods, _r=remote: dict(_r.remote_score(seg, list(mods))),
            )
            continue
        registry.register(
            srv.model_id,
            srv.modalities,
            lambda seg, mods, _r=rec: {m.value: _r.score(seg, m) for m in mods},
        )
    return registry


# --- event log --------------------------------------------------------------

EVENT_KINDS = (
    "session_started",
    "segment_captured",
    "segment_scored",
    "scoring_failed",
    "requirement_tagged",
    "alert_raised",
    "session_ended",
)


@dataclass(frozen=True)
class SessionEvent:
    seq: int
    ts: str
    kind: str
    payload: dict

    def to_json_obj(self) -> dict:
        return {"seq": self.seq, "ts": self.ts, "kind": self.kind, "payload": self.payload}

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> "SessionEvent":
        if obj["kind"] not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {obj['kind']!r}")
        return cls(int(obj["seq"]), obj["ts"], obj["kind"], dict(obj["payload"]))


class EventLog:
    """Append-only JSONL event log, one file per session."""

    def __init__(self, path: Path):
        self.path = path
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._next_seq = 0
        if self.path.exists():
            self._next_seq = sum(1 for _ in self.read())

    def append(self, kind: str, payload: dict, ts: Optional[str] = None) -> SessionEvent:
        with self._lock:
            ev = SessionEvent(
                seq=self._next_seq,
                ts=ts or datetime.now(timezone.utc).isoformat(),
                kind=kind,
                payload=payload,
            )
            with open(self.path, "a", encoding="utf-8") as f:
                f.write(json.dumps(ev.to_json_obj(), sort_keys=True) + "\n")
                f.flush()
            self._next_seq += 1
            return ev

    def read(self) -> Iterable[SessionEvent]:
        if not self.path.exists():
            return
        with open(self.path, encoding="utf-8") as f:
            for line in f:
                line = line.strip()
                if line:
                    yield SessionEvent.from_json_obj(json.loads(line))


# --- derived state ----------------------------------------------------------

@dataclass
class SessionState:
    """Pure fold over the event stream; replaying a log reproduces it exactly."""

    session_id: str = ""
    name: str = ""
    created_at: str = ""
    segment_length_s: float = 10.0
    segmentation_mode: str = "fixed"
    open_: bool = False
    ended_at_t: Optional[float] = None
    segments: dict[int, tuple[float, float]] = field(default_factory=dict)
    scores: dict[int, SegmentScore] = field(default_factory=dict)
    failed: dict[int, str] = field(default_factory=dict)
    tags: list[RequirementTag] = field(default_factory=list)
    open_tags: dict[str, RequirementTag] = field(default_factory=dict)
    alerts: list[dict] = field(default_factory=list)
    last_seq: int = -1

    def apply(self, ev: SessionEvent) -> None:
        if ev.seq != self.last_seq + 1:
            raise ValueError(f"event gap: expected seq {self.last_seq + 1}, got {ev.seq}")
        self.last_seq = ev.seq
        p = ev.payload
        if ev.kind == "session_started":
            self.session_id = p["session_id"]
            self.name = p.get("name", "")
            self.created_at = p.get("created_at", ev.ts)
            self.segment_length_s = float(p.get("segment_length_s", 10.0))
            self.segmentation_mode = p.get("segmentation_mode", "fixed")
            self.open_ = True
        elif ev.kind == "segment_captured":
            seg = MediaSegment.from_json_obj(p)
            self.segments[seg.segment_id] = (seg.t_start, seg.t_end)
        elif ev.kind == "segment_scored":
            score = SegmentScore.from_json_obj(p)
            self.scores[score.segment_id] = score
        elif ev.kind == "scoring_failed":
            self.failed[int(p["segment_id"])] = p.get("reason", "unknown")
        elif ev.kind == "requirement_tagged":
            self._apply_tag(p)
        elif ev.kind == "alert_raised":
            self.alerts.append(dict(p))
        elif ev.kind == "session_ended":
            self.open_ = False
            self.ended_at_t = float(p["t_end"]) if "t_end" in p else None

    def _apply_tag(self, p: Mapping) -> None:
        req_id = p["requirement_id"]
        action = p["action"]
        t = float(p["t"])
        if action == "open":
            self.open_tags[req_id] = RequirementTag(
                requirement_id=req_id, label=p.get("label", ""), t_start=t
            )
        elif action == "close":
            opened = self.open_tags.pop(req_id)
            self.tags.append(
                RequirementTag(
                    requirement_id=req_id, label=opened.label, t_start=opened.t_start, t_end=t
                )
            )

    @property
    def next_segment_id(self) -> int:
        return len(self.segments)

    def session_meta(self) -> dict:
        return {
            "session_id": self.session_id,
            "name": self.name,
            "created_at": self.created_at,
            "segment_length_s": self.segment_length_s,
            "segmentation_mode": self.segmentation_mode,
            "segments_captured": len(self.segments),
            "segments_scored": len(self.scores),
            "segments_failed": len(self.failed),
        }


def fold_events(events: Iterable[SessionEvent]) -> SessionState:
    state = SessionState()
    for ev in events:
        state.apply(ev)
    return state


# --- the service ------------------------------------------------------------

@dataclass(frozen=True)
class IngestSource:
    frames: Sequence[TimedFrame] = ()
    audio: Sequence[AudioBlock] = ()
    transcript: Sequence[TranscriptSpan] = ()

    def duration(self) -> float:
        ends = [0.0]
        if self.frames:
            ends.append(self.frames[-1].t)
        if self.audio:
            ends.append(max(b.t_end for b in self.audio))
        if self.transcript:
            ends.append(max(s.t_end for s in self.transcript))
        return max(ends)


class SessionService:
    """Owns event logs and per-session derived state; replays logs on startup."""

    def __init__(self, config: ServiceConfig, registry: Optional[ServerRegistry] = None):
        self.config = config
        self.registry = registry if registry is not None else build_registry(config)
        self.storage = Path(config.storage_dir)
        self.storage.mkdir(parents=True, exist_ok=True)
        self.clip_store = ClipStore(self.storage)
        self._logs: dict[str, EventLog] = {}
        self._states: dict[str, SessionState] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._subscribers: dict[str, list[Callable[[SessionEvent], None]]] = {}
        self._replay_existing()

    def _replay_existing(self) -> None:
        for events_file in sorted(self.storage.glob("*/events.jsonl")):
            session_id = events_file.parent.name
            log = EventLog(events_file)
            self._logs[session_id] = log
            self._states[session_id] = fold_events(log.read())
            self._locks[session_id] = threading.Lock()

    def _log_path(self, session_id: str) -> Path:
        return self.storage / session_id / "events.jsonl"

    def _append(self, session_id: str, kind: str, payload: dict) -> SessionEvent:
        ev = self._logs[session_id].append(kind, payload)
        self._states[session_id].apply(ev)
        for cb in self._subscribers.get(session_id, []):
            cb(ev)
        return ev

    def subscribe(self, session_id: str, cb: Callable[[SessionEvent], None]) -> None:
        self._subscribers.setdefault(session_id, []).append(cb)

    def unsubscribe(self, session_id: str, cb: Callable[[SessionEvent], None]) -> None:
        subs = self._subscribers.get(session_id, [])
        if cb in subs:
            subs.remove(cb)

    def list_sessions(self) -> list[dict]:
        return [s.session_meta() for s in self._states.values()]

    def state(self, session_id: str) -> SessionState:
        if session_id not in self._states:
            raise UnknownSessionError(session_id)
        return self._states[session_id]

    def events(self, session_id: str, from_seq: int = 0) -> list[SessionEvent]:
        if session_id not in self._logs:
            raise UnknownSessionError(session_id)
        return [ev for ev in self._logs[session_id].read() if ev.seq >= from_seq]

    def create_session(self, session_id: str, name: str = "") -> SessionState:
        if session_id in self._states:
            raise ValueError(f"session {session_id!r} already exists")
        self._logs[session_id] = EventLog(self._log_path(session_id))
        self._states[session_id] = SessionState()
        self._locks[session_id] = threading.Lock()
        self._append(
            session_id,
            "session_started",
            {
                "session_id": session_id,
                "name": name,
                "created_at": datetime.now(timezone.utc).isoformat(),
                "segment_length_s": self.config.segmenter.length_s,
                "segmentation_mode": self.config.segmenter.mode.value,
            },
        )
        return self._states[session_id]

    def _lock(self, session_id: str) -> threading.Lock:
        if session_id not in self._locks:
            raise UnknownSessionError(session_id)
        return self._locks[session_id]

    def _require_open(self, session_id: str) -> SessionState:
        state = self.state(session_id)
        if not state.open_:
            raise SessionClosedError(f"session {session_id!r} is not open")
        return state

    def ingest(
        self,
        session_id: str,
        source: IngestSource,
        in_flight_limit: int = DEFAULT_IN_FLIGHT_LIMIT,
    ) -> list[SessionEvent]:
        """Run the full pipeline over a file-based source: segment, cut, score
        concurrently, reorder, and append one terminal event per segment."""
        with self._lock(session_id):
            state = self._require_open(session_id)
            cfg = self.config.segmenter
            duration = source.duration()
            if duration <= 0:
                raise ValueError("source has no timed payload")
            if cfg.mode is SegmentationMode.CONVERSATIONAL and source.transcript:
                windows = segment_conversational(
                    list(source.transcript), cfg.pause_threshold_s, cfg.max_segment_s
                )
            else:
                windows = segment_fixed(duration, cfg.length_s, cfg.min_tail_s)
            base_id = state.next_segment_id
            emitted: list[SessionEvent] = []
            segments: list[MediaSegment] = []
            for i, window in enumerate(windows):
                seg = cut_segment(
                    window,
                    session_id,
                    base_id + i,
                    list(source.frames),
                    list(source.audio),
                    list(source.transcript),
                    self.clip_store,
                    target_fps=cfg.target_fps,
                )
                segments.append(seg)
                emitted.append(self._append(session_id, "segment_captured", seg.to_json_obj()))

            def score_one(seg: MediaSegment):
                try:
                    plan = route(seg, self.registry)
                    return dispatch_and_collect(seg, plan, self.registry, self.config.fusion)
                except (NoRouteError, ScoringFailed) as e:
                    errors = getattr(e, "errors", {})
                    return FailedScore(
                        seg.segment_id,
                        type(e).__name__,
                        {m: str(v) for m, v in errors.items()},
                    )

            reorder = ReorderBuffer()
            reorder.next_id = base_id
            with ThreadPoolExecutor(max_workers=in_flight_limit) as pool:
                for result in pool.map(score_one, segments):
                    for ready in reorder.push(result):
                        emitted.append(self._emit_terminal(session_id, ready))
            emitted.extend(self._refresh_alerts(session_id))
            return emitted

    def _emit_terminal(self, session_id: str, result) -> SessionEvent:
        if isinstance(result, SegmentScore):
            return self._append(session_id, "segment_scored", result.to_json_obj())
        payload = {
            "segment_id": result.segment_id,
            "reason": result.reason,
            "errors": {m.value: msg for m, msg in result.errors.items()},
        }
        return self._append(session_id, "scoring_failed", payload)

    def _refresh_alerts(self, session_id: str) -> list[SessionEvent]:
        state = self._states[session_id]
        alerts = analytics.detect_alerts(
            list(state.scores.values()),
            state.segments,
            session_id,
            self.config.valence_map,
            window_n=self.config.alert_window_n,
            threshold=self.config.alert_threshold,
        )
        known = {tuple(a["segment_ids"]) for a in state.alerts}
        emitted = []
        for a in alerts:
            if a.segment_ids in known:
                continue
            emitted.append(
                self._append(
                    session_id,
                    "alert_raised",
                    {
                        "session_id": a.session_id,
                        "t_start": _fmt(a.t_start),
                        "t_end": _fmt(a.t_end),
                        "kind": a.kind,
                        "trigger_labels": list(a.trigger_labels),
                        "mean_valence": _fmt(a.mean_valence),
                        "segment_ids": list(a.segment_ids),
                    },
                )
            )
        return emitted

    def tag(
        self, session_id: str, requirement_id: str, action: str, t: float, label: str = ""
    ) -> SessionEvent:
        with self._lock(session_id):
            state = self._require_open(session_id)
            if action == "open":
                if requirement_id in state.open_tags:
                    raise DuplicateOpenTagError(f"{requirement_id!r} is already open")
            elif action == "close":
                if requirement_id not in state.open_tags:
                    raise NoOpenTagError(f"no open tag for {requirement_id!r}")
            else:
                raise ValueError(f"unknown tag action {action!r}")
            payload = {"requirement_id": requirement_id, "action": action, "t": t}
            if label:
                payload["label"] = label
            return self._append(session_id, "requirement_tagged", payload)

    def stop(self, session_id: str, t_end: Optional[float] = None) -> list[SessionEvent]:
        with self._lock(session_id):
            state = self._require_open(session_id)
            if t_end is None:
                t_end = max((e for _, e in state.segments.values()), default=0.0)
            emitted = []
            for req_id in sorted(state.open_tags):
                close_t = max(t_end, state.open_tags[req_id].t_start + 1e-9)
                emitted.append(
                    self._append(
                        session_id,
                        "requirement_tagged",
                        {"requirement_id": req_id, "action": "close", "t": close_t},
                    )
                )
            emitted.append(self._append(session_id, "session_ended", {"t_end": t_end}))
            return emitted

    def report(self, session_id: str, fmt: str = "json") -> str:
        state = self.state(session_id)
        if state.open_:
            raise analytics.SessionStillOpenError(f"session {session_id!r} is still open")
        scores = [state.scores[k] for k in sorted(state.scores)]
        records = analytics.link(scores, state.segments, state.tags)
        ranking = analytics.prioritize(records, self.config.valence_map)
        alert_objs = [
            analytics.Alert(
                session_id=a["session_id"],
                t_start=float(a["t_start"]),
                t_end=float(a["t_end"]),
                kind=a["kind"],
                trigger_labels=tuple(a["trigger_labels"]),
                mean_valence=float(a["mean_valence"]),
                segment_ids=tuple(a["segment_ids"]),
            )
            for a in state.alerts
        ]
        report = analytics.build_report(
            state.session_meta(), scores, state.segments, records, ranking, alert_objs
        )
        if fmt == "markdown":
            return analytics.render_report_markdown(report)
        return analytics.render_report_json(report)
