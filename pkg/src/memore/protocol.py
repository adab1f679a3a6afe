"""Inference wire protocol: request/response schemas shared by the router client
and any conforming model server."""

from __future__ import annotations

import json
from typing import Any, Mapping

import jsonschema

from .core import LABEL_ORDER, SUM_TOLERANCE, EmotionDistribution

PROTOCOL_VERSION = 1
JOINT_MODALITY = "audiovisual"
MAX_INLINE_BYTES = 1 << 20

_LABEL_KEYS = [l.value for l in LABEL_ORDER]

_DISTRIBUTION_SCHEMA = {
    "type": "object",
    "properties": {k: {"type": "number", "minimum": 0, "maximum": 1} for k in _LABEL_KEYS},
    "required": _LABEL_KEYS,
    "additionalProperties": False,
}

SCORE_REQUEST_SCHEMA = {
    "type": "object",
    "properties": {
        "protocol_version": {"const": PROTOCOL_VERSION},
        "session_id": {"type": "string", "minLength": 1},
        "segment_id": {"type": "integer", "minimum": 0},
        "modalities": {
            "type": "object",
            "properties": {
                "video": {
                    "type": "object",
                    "properties": {
                        "frames_uri": {"type": "string"},
                        "frame_count": {"type": "integer", "minimum": 0},
                        "fps": {"type": "number", "exclusiveMinimum": 0},
                    },
                    "required": ["frames_uri", "frame_count", "fps"],
                    "additionalProperties": False,
                },
                "audio": {
                    "type": "object",
                    "properties": {
                        "wav_uri": {"type": "string"},
                        "sample_rate": {"type": "integer", "enum": [16000, 44100, 48000]},
                    },
                    "required": ["wav_uri", "sample_rate"],
                    "additionalProperties": False,
                },
                "text": {
                    "type": "object",
                    "properties": {"content": {"type": "string"}},
                    "required": ["content"],
                    "additionalProperties": False,
                },
            },
            "additionalProperties": False,
            "minProperties": 1,
        },
    },
    "required": ["protocol_version", "session_id", "segment_id", "modalities"],
    "additionalProperties": False,
}

SCORE_RESPONSE_SCHEMA = {
    "type": "object",
    "properties": {
        "protocol_version": {"const": PROTOCOL_VERSION},
        "segment_id": {"type": "integer", "minimum": 0},
        "model_id": {"type": "string", "minLength": 1},
        "distributions": {
            "type": "object",
            "properties": {
                "video": _DISTRIBUTION_SCHEMA,
                "audio": _DISTRIBUTION_SCHEMA,
                "text": _DISTRIBUTION_SCHEMA,
                JOINT_MODALITY: _DISTRIBUTION_SCHEMA,
            },
            "additionalProperties": False,
            "minProperties": 1,
        },
        "latency_ms": {"type": "number", "minimum": 0},
    },
    "required": ["protocol_version", "segment_id", "model_id", "distributions", "latency_ms"],
    "additionalProperties": False,
}

HEALTH_RESPONSE_SCHEMA = {
    "type": "object",
    "properties": {
        "status": {"const": "ok"},
        "model_id": {"type": "string"},
        "modalities": {"type": "array", "items": {"type": "string"}},
    },
    "required": ["status", "model_id", "modalities"],
    "additionalProperties": False,
}


class ProtocolViolation(ValueError):
    """Message fails the wire schema or a distribution invariant."""

    def __init__(self, message: str, error_code: str = "schema_violation"):
        super().__init__(message)
        self.error_code = error_code


def validate_score_request(obj: Mapping[str, Any]) -> None:
    try:
        jsonschema.validate(obj, SCORE_REQUEST_SCHEMA)
    except jsonschema.ValidationError as e:
        raise ProtocolViolation(f"invalid score request: {e.message}") from e


def validate_score_response(obj: Mapping[str, Any]) -> None:
    """Schema check plus the distribution-sum invariant. A response whose
    probabilities do not sum to 1 is rejected, never renormalized."""
    try:
        jsonschema.validate(obj, SCORE_RESPONSE_SCHEMA)
    except jsonschema.ValidationError as e:
        raise ProtocolViolation(f"invalid score response: {e.message}") from e
    for name, dist in obj["distributions"].items():
        total = sum(dist[k] for k in _LABEL_KEYS)
        if abs(total - 1.0) > SUM_TOLERANCE:
            raise ProtocolViolation(
                f"distribution for {name!r} sums to {total}, not 1",
                error_code="bad_distribution",
            )


def parse_response_distributions(obj: Mapping[str, Any]) -> dict[str, EmotionDistribution]:
    validate_score_response(obj)
    return {
        name: EmotionDistribution.from_json_obj(dist)
        for name, dist in obj["distributions"].items()
    }


def canonical_json(obj: Any) -> str:
    """Deterministic rendering used for goldens and reports."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
