"""Command-line entry points."""

from __future__ import annotations

import os
import sys
from pathlib import Path

import click

from .core import EmotionLabel, Modality
from .evalharness import (
    EmptyAfterMappingError,
    export_per_class,
    export_sweep,
    load_manifest,
    run_per_class,
    run_sweep,
)
from .fusion import FusionConfig, dominant, fuse
from .recognizers import PlaybackRecognizer
from .service import IngestSource, ServiceConfig, SessionService


def _load_config(config_path: str | None) -> ServiceConfig:
    path = os.environ.get("MEMORE_CONFIG") or config_path
    if path:
        return ServiceConfig.from_toml(path)
    return ServiceConfig()


@click.group()
def main() -> None:
    """MEmoRE: emotion-aware requirements elicitation sessions."""


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--host", default=None, help="override the configured bind host")
@click.option("--port", default=None, type=int, help="override the configured bind port")
def serve(config_path, host, port) -> None:
    """Run the session API server."""
    import uvicorn

    from .api import create_app

    cfg = _load_config(config_path)
    service = SessionService(cfg)
    bind_host, _, bind_port = cfg.bind.partition(":")
    uvicorn.run(
        create_app(service),
        host=host or bind_host or "127.0.0.1",
        port=port or int(bind_port or 8787),
    )


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--session", "session_id", required=True)
@click.option("--name", default="")
@click.option("--frames", type=click.Path(exists=True), default=None)
@click.option("--fps", default=24.0, show_default=True)
@click.option("--audio", type=click.Path(exists=True), default=None)
@click.option("--transcript", type=click.Path(exists=True), default=None)
@click.option("--stop/--no-stop", default=False, help="end the session after ingest")
def ingest(config_path, session_id, name, frames, fps, audio, transcript, stop) -> None:
    """Ingest file-based media into a session (created if absent)."""
    from .ingest_io import read_frames_dir, read_transcript_file, read_wav_block

    cfg = _load_config(config_path)
    service = SessionService(cfg)
    if session_id not in {s["session_id"] for s in service.list_sessions()}:
        service.create_session(session_id, name)
    source = IngestSource(
        frames=read_frames_dir(frames, fps) if frames else (),
        audio=(read_wav_block(audio),) if audio else (),
        transcript=read_transcript_file(transcript) if transcript else (),
    )
    events = service.ingest(session_id, source)
    click.echo(f"appended {len(events)} events to session {session_id}")
    if stop:
        service.stop(session_id)
        click.echo("session ended")


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--session", "session_id", required=True)
@click.option("--format", "fmt", type=click.Choice(["json", "markdown"]), default="json")
def report(config_path, session_id, fmt) -> None:
    """Print the validation report for an ended session."""
    cfg = _load_config(config_path)
    service = SessionService(cfg)
    click.echo(service.report(session_id, fmt))


@main.group()
def eval() -> None:
    """Desk-scale evaluation harness."""


def _truth_from_manifest(manifest_path: str):
    rows = load_manifest(manifest_path)
    truth = []
    t = 0.0
    for row in rows:
        truth.append((t, t + row.duration_s, EmotionLabel(row.label)))
        t += row.duration_s
    return truth, t


@eval.command()
@click.option("--manifest", required=True, type=click.Path(exists=True),
              help="CSV of ground-truth runs in timeline order")
@click.option("--scores", required=True, type=click.Path(exists=True),
              help="playback JSON keyed <prefix><L>/<segment_id>")
@click.option("--lengths", default="6,10,15,30,60", show_default=True)
@click.option("--key-prefix", default="sweep-L", show_default=True)
@click.option("--out", required=True, type=click.Path())
def sweep(manifest, scores, lengths, key_prefix, out) -> None:
    """Segment-length accuracy sweep over a pre-scored session."""
    truth, duration = _truth_from_manifest(manifest)
    playback = PlaybackRecognizer.from_file(scores)
    length_values = tuple(float(x) for x in lengths.split(","))

    def scorer(L: float, seg_id: int, window):
        key = f"{key_prefix}{L:g}/{seg_id}"
        entry = playback.entries.get(key)
        if entry is None:
            raise KeyError(f"no playback entry for {key!r}")
        return entry

    result = run_sweep(duration, truth, scorer, length_values)
    export_sweep(result, out)
    for r in result.per_length:
        click.echo(
            f"L={r.length_s:g}s  {r.segments_correct}/{r.segments_total}"
            f"  accuracy={r.accuracy:.4f}"
        )
    click.echo(f"best_length={result.best_length:g}")


@eval.command()
@click.option("--manifest", required=True, type=click.Path(exists=True))
@click.option("--scores", required=True, type=click.Path(exists=True),
              help="playback JSON keyed by clip_key")
@click.option("--out", required=True, type=click.Path())
def classes(manifest, scores, out) -> None:
    """Per-emotion recall over a labeled clip manifest."""
    rows = load_manifest(manifest)
    playback = PlaybackRecognizer.from_file(scores)
    cfg = FusionConfig()

    def predict(clip_key: str) -> EmotionLabel:
        entry = playback.entries[clip_key]
        dists = {Modality(m): d for m, d in entry.items()}
        return dominant(fuse(dists, cfg), cfg.tie_break)

    try:
        result = run_per_class(rows, predict)
    except EmptyAfterMappingError as e:
        raise click.ClickException(str(e))
    export_per_class(result, out)
    for r in result.per_label:
        click.echo(f"{r.label.value:<13} {r.correct}/{r.total}  recall={r.recall:.4f}")
    click.echo(f"overall={result.overall_correct}/{result.overall_total}")


if __name__ == "__main__":
    main()
