"""Emotion models the sidecar can host.

StubModel is the deterministic default: it hashes the clip key into a
distribution, so any (session, segment, modality) triple scores identically
across runs and platforms. TableModel is the adapter seam for a trained
network distilled to a lookup table; actually training one is out of scope.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
from pathlib import Path
from typing import Mapping, Optional, Protocol

from memore.core import LABEL_ORDER, SUM_TOLERANCE

MODEL_PATH_ENV = "MEMORE_MODEL_PATH"

log = logging.getLogger("memore_sidecar")


class ModelLoadError(RuntimeError):
    """The weights file exists but is not a usable model."""


class EmotionModel(Protocol):
    model_id: str
    latency_ms: float

    def score(self, session_id: str, segment_id: int, modality: str) -> dict[str, float]:
        ...


class StubModel:
    """Hash of the clip key -> byte weights -> normalized distribution."""

    model_id = "stub-v1"
    latency_ms = 1.0

    def score(self, session_id: str, segment_id: int, modality: str) -> dict[str, float]:
        digest = hashlib.sha256(f"{session_id}/{segment_id}/{modality}".encode()).digest()
        weights = [digest[i] + 1 for i in range(len(LABEL_ORDER))]
        total = sum(weights)
        return {l.value: w / total for l, w in zip(LABEL_ORDER, weights)}


class TableModel:
    """Lookup-table model loaded from a JSON weights export.

    File shape: {"model_id": str, "table": {"<session>/<segment>/<modality>":
    {label: prob, ...}}, "fallback": {label: prob, ...}}. Unknown keys fall
    back to the fallback distribution.
    """

    latency_ms = 1.0

    def __init__(self, model_id: str, table: Mapping[str, dict], fallback: dict):
        self.model_id = model_id
        self._table = dict(table)
        self._fallback = dict(fallback)

    @classmethod
    def from_file(cls, path: Path | str) -> "TableModel":
        try:
            obj = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise ModelLoadError(f"cannot read weights file {path}: {e}") from e
        if not isinstance(obj, dict) or "model_id" not in obj or "fallback" not in obj:
            raise ModelLoadError(f"weights file {path} missing model_id/fallback")
        for key, dist in [("fallback", obj["fallback"]), *obj.get("table", {}).items()]:
            _check_distribution(key, dist)
        return cls(obj["model_id"], obj.get("table", {}), obj["fallback"])

    def score(self, session_id: str, segment_id: int, modality: str) -> dict[str, float]:
        key = f"{session_id}/{segment_id}/{modality}"
        return dict(self._table.get(key, self._fallback))


def _check_distribution(key: str, dist: dict) -> None:
    expected = {l.value for l in LABEL_ORDER}
    if set(dist) != expected:
        raise ModelLoadError(f"entry {key!r} does not cover the 8 labels")
    total = sum(dist.values())
    if abs(total - 1.0) > SUM_TOLERANCE:
        raise ModelLoadError(f"entry {key!r} sums to {total}, not 1")


def load_model_from_env(environ: Mapping[str, str] | None = None) -> Optional[EmotionModel]:
    """Resolve the model: weights path from the environment, else the stub."""
    env = os.environ if environ is None else environ
    path = env.get(MODEL_PATH_ENV)
    if not path or not Path(path).exists():
        if path:
            log.warning("weights path %s not found; serving the stub model", path)
        else:
            log.info("no %s set; serving the stub model", MODEL_PATH_ENV)
        return StubModel()
    return TableModel.from_file(path)
