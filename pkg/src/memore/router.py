"""Per-segment scoring-path selection, dispatch, and in-order result delivery."""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Optional, Sequence

from .core import (
    EmotionDistribution,
    EmotionLabel,
    MediaSegment,
    Modality,
    ModalityScore,
    SegmentScore,
)
from .fusion import FusionConfig, NoModalitiesError, dominant, fuse
from .protocol import JOINT_MODALITY

DEFAULT_IN_FLIGHT_LIMIT = 8
DEFAULT_REORDER_TIMEOUT_S = 30.0
FAILURE_THRESHOLD = 3  # consecutive failures before a server is marked Down


class HealthState(str, enum.Enum):
    UP = "up"
    DOWN = "down"


class NoRouteError(RuntimeError):
    """No Up server covers any present modality."""


class ScoringFailed(Exception):
    """Every modality in the plan failed; carries the per-modality error list."""

    def __init__(self, segment_id: int, errors: Mapping[Modality, str]):
        super().__init__(f"segment {segment_id}: all modalities failed")
        self.segment_id = segment_id
        self.errors = dict(errors)


ScoreFn = Callable[[MediaSegment, Sequence[Modality]], Mapping[str, ModalityScore]]


@dataclass
class ServerEntry:
    model_id: str
    modalities: frozenset[Modality]
    score_fn: ScoreFn
    state: HealthState = HealthState.UP
    consecutive_failures: int = 0
    last_seen: float = 0.0

    def record_success(self, now: float) -> None:
        self.consecutive_failures = 0
        self.state = HealthState.UP
        self.last_seen = now

    def record_failure(self) -> None:
        self.consecutive_failures += 1
        if self.consecutive_failures >= FAILURE_THRESHOLD:
            self.state = HealthState.DOWN


class ServerRegistry:
    """Known scoring servers with health state; model_id is the unique key."""

    def __init__(self) -> None:
        self._servers: dict[str, ServerEntry] = {}

    def register(
        self,
        model_id: str,
        modalities: frozenset[Modality] | set[Modality],
        score_fn: ScoreFn,
    ) -> ServerEntry:
        if model_id in self._servers:
            raise ValueError(f"duplicate model_id {model_id!r}")
        entry = ServerEntry(model_id, frozenset(modalities), score_fn)
        self._servers[model_id] = entry
        return entry

    def up_servers(self) -> list[ServerEntry]:
        return [s for s in self._servers.values() if s.state is HealthState.UP]

    def get(self, model_id: str) -> ServerEntry:
        return self._servers[model_id]

    def __iter__(self):
        return iter(self._servers.values())


@dataclass(frozen=True)
class Dispatch:
    model_id: str
    modalities: tuple[Modality, ...]


@dataclass(frozen=True)
class DispatchPlan:
    segment_id: int
    dispatches: tuple[Dispatch, ...]


def route(segment: MediaSegment, registry: ServerRegistry) -> DispatchPlan:
    """Cover the maximal servable subset of present modalities with Up servers,
    preferring one multi-modal dispatch over several uni-modal ones."""
    present = set(segment.modalities_present)
    if not present:
        raise NoRouteError(f"segment {segment.segment_id} has no modalities")
    # greedy: widest coverage first, multi-modal servers before uni-modal,
    # model_id for determinism
    candidates = sorted(
        registry.up_servers(),
        key=lambda s: (-len(s.modalities & present), -len(s.modalities), s.model_id),
    )
    uncovered = set(present)
    dispatches: list[Dispatch] = []
    for server in candidates:
        overlap = server.modalities & uncovered
        if overlap:
            mods = tuple(sorted(overlap, key=lambda m: m.value))
            dispatches.append(Dispatch(server.model_id, mods))
            uncovered -= overlap
        if not uncovered:
            break
    if not dispatches:
        raise NoRouteError(
            f"no Up server covers modalities {sorted(m.value for m in present)}"
        )
    return DispatchPlan(segment.segment_id, tuple(dispatches))


def dispatch_and_collect(
    segment: MediaSegment,
    plan: DispatchPlan,
    registry: ServerRegistry,
    fusion_cfg: FusionConfig | None = None,
    clock: Callable[[], float] = time.monotonic,
) -> SegmentScore:
    """Run every dispatch in the plan, fuse the successes, and emit one
    SegmentScore. Partial failures are recorded on the score; raises
    ScoringFailed only when every modality fails."""
    t0 = clock()
    per_modality: dict[Modality, ModalityScore] = {}
    failures: dict[Modality, str] = {}
    fuse_inputs: dict[Modality, EmotionDistribution] = {}
    joint: list[ModalityScore] = []
    for d in plan.dispatches:
        server = registry.get(d.model_id)
        try:
            result = server.score_fn(segment, d.modalities)
            server.record_success(clock())
        except Exception as e:  # noqa: BLE001 - typed per-modality degradation
            server.record_failure()
            for m in d.modalities:
                failures[m] = f"{type(e).__name__}: {e}"
            continue
        for name, ms in result.items():
            if name == JOINT_MODALITY:
                joint.append(ms)
            else:
                m = Modality(name)
                per_modality[m] = ms
                fuse_inputs[m] = ms.distribution
    if not per_modality and not joint:
        raise ScoringFailed(segment.segment_id, failures)
    cfg = fusion_cfg or FusionConfig()
    if joint and not fuse_inputs:
        fused = joint[0].distribution
    else:
        # a joint audio-visual distribution participates as one video-weighted input
        if joint:
            fuse_inputs.setdefault(Modality.VIDEO, joint[0].distribution)
        fused = fuse(fuse_inputs, cfg)
    latency_ms = (clock() - t0) * 1000.0
    return SegmentScore(
        segment_id=segment.segment_id,
        per_modality=per_modality,
        fused=fused,
        dominant=dominant(fused, cfg.tie_break),
        latency_ms=latency_ms,
        failures=failures,
    )


@dataclass(frozen=True)
class FailedScore:
    """Terminal event for a segment whose scoring never completed."""

    segment_id: int
    reason: str
    errors: Mapping[Modality, str] = field(default_factory=dict)


Terminal = SegmentScore | FailedScore


class ReorderBuffer:
    """Re-emit out-of-order terminal results in strictly increasing segment_id.

    A missing segment overdue by more than timeout_s is released as a
    FailedScore(timeout) so the stream never stalls.
    """

    def __init__(
        self,
        timeout_s: float = DEFAULT_REORDER_TIMEOUT_S,
        clock: Callable[[], float] = time.monotonic,
    ):
        self.timeout_s = timeout_s
        self.clock = clock
        self.next_id = 0
        self.pending: dict[int, Terminal] = {}
        self.waiting_since: Optional[float] = None

    def push(self, result: Terminal) -> list[Terminal]:
        if result.segment_id < self.next_id:
            return []  # duplicate or late arrival for an already-released slot
        self.pending[result.segment_id] = result
        return self._drain()

    def tick(self) -> list[Terminal]:
        """Release timed-out heads; call periodically or before reads."""
        out: list[Terminal] = []
        while True:
            out.extend(self._drain())
            if self.next_id in self.pending or not self.pending:
                break
            if self.waiting_since is None:
                break
            if self.clock() - self.waiting_since <= self.timeout_s:
                break
            out.append(FailedScore(self.next_id, "timeout"))
            self.next_id += 1
            self.waiting_since = self.clock()
        return out

    def _drain(self) -> list[Terminal]:
        out: list[Terminal] = []
        while self.next_id in self.pending:
            out.append(self.pending.pop(self.next_id))
            self.next_id += 1
            self.waiting_since = None
        if self.pending and self.waiting_since is None:
            self.waiting_since = self.clock()
        return out

    def __len__(self) -> int:
        return len(self.pending)
