"""HTTP/WebSocket API over the session service."""

from __future__ import annotations

import queue
from typing import Optional

from fastapi import FastAPI, HTTPException, Query, WebSocket, WebSocketDisconnect
from pydantic import BaseModel

from . import analytics
from .service import (
    DuplicateOpenTagError,
    IngestSource,
    NoOpenTagError,
    SessionClosedError,
    SessionService,
    UnknownSessionError,
)


class CreateSessionBody(BaseModel):
    session_id: str
    name: str = ""


class IngestBody(BaseModel):
    frames_dir: Optional[str] = None
    fps: float = 24.0
    audio_wav: Optional[str] = None
    transcript: Optional[str] = None


class TagBody(BaseModel):
    requirement_id: str
    action: str
    t: float
    label: str = ""


class StopBody(BaseModel):
    t_end: Optional[float] = None


def load_source(body: IngestBody) -> IngestSource:
    from .ingest_io import read_frames_dir, read_transcript_file, read_wav_block

    frames = read_frames_dir(body.frames_dir, body.fps) if body.frames_dir else ()
    audio = (read_wav_block(body.audio_wav),) if body.audio_wav else ()
    transcript = read_transcript_file(body.transcript) if body.transcript else ()
    return IngestSource(frames=frames, audio=audio, transcript=transcript)


def create_app(service: SessionService) -> FastAPI:
    app = FastAPI(title="memore", version="0.1.0")

    @app.get("/v1/sessions")
    def list_sessions():
        return service.list_sessions()

    @app.post("/v1/sessions", status_code=201)
    def create_session(body: CreateSessionBody):
        try:
            state = service.create_session(body.session_id, body.name)
        except ValueError as e:
            raise HTTPException(409, str(e))
        return state.session_meta()

    @app.post("/v1/sessions/{session_id}/ingest")
    def ingest(session_id: str, body: IngestBody):
        try:
            events = service.ingest(session_id, load_source(body))
        except UnknownSessionError:
            raise HTTPException(404, f"unknown session {session_id!r}")
        except SessionClosedError as e:
            raise HTTPException(409, str(e))
        except (OSError, ValueError) as e:
            raise HTTPException(422, f"ingest format error: {e}")
        return {"events": [ev.to_json_obj() for ev in events]}

    @app.post("/v1/sessions/{session_id}/tags")
    def tag(session_id: str, body: TagBody):
        try:
            ev = service.tag(session_id, body.requirement_id, body.action, body.t, body.label)
        except UnknownSessionError:
            raise HTTPException(404, f"unknown session {session_id!r}")
        except (NoOpenTagError, DuplicateOpenTagError, ValueError) as e:
            raise HTTPException(409, str(e))
        return ev.to_json_obj()

    @app.post("/v1/sessions/{session_id}/stop")
    def stop(session_id: str, body: StopBody | None = None):
        try:
            events = service.stop(session_id, body.t_end if body else None)
        except UnknownSessionError:
            raise HTTPException(404, f"unknown session {session_id!r}")
        except SessionClosedError as e:
            raise HTTPException(409, str(e))
        return {"events": [ev.to_json_obj() for ev in events]}

    @app.get("/v1/sessions/{session_id}/report")
    def report(session_id: str, format: str = Query("json")):
        try:
            doc = service.report(session_id, format)
        except UnknownSessionError:
            raise HTTPException(404, f"unknown session {session_id!r}")
        except analytics.SessionStillOpenError as e:
            raise HTTPException(409, str(e))
        if format == "markdown":
            from fastapi.responses import PlainTextResponse

            return PlainTextResponse(doc, media_type="text/markdown")
        from fastapi.responses import Response

        return Response(doc, media_type="application/json")

    @app.websocket("/v1/sessions/{session_id}/events")
    async def events_ws(ws: WebSocket, session_id: str, from_seq: int = Query(0)):
        await ws.accept()
        try:
            backlog = service.events(session_id, from_seq)
        except UnknownSessionError:
            await ws.close(code=4004)
            return
        live: "queue.Queue" = queue.Queue()
        service.subscribe(session_id, live.put)
        try:
            sent = from_seq - 1
            for ev in backlog:
                await ws.send_json(ev.to_json_obj())
                sent = ev.seq
            while True:
                # interleave live event delivery with inbound tag commands
                try:
                    ev = live.get_nowait()
                    if ev.seq > sent:
                        await ws.send_json(ev.to_json_obj())
                        sent = ev.seq
                    continue
                except queue.Empty:
                    pass
                import asyncio

                try:
                    msg = await asyncio.wait_for(ws.receive_json(), timeout=0.05)
                except asyncio.TimeoutError:
                    continue
                if msg.get("cmd") == "tag":
                    try:
                        service.tag(
                            session_id,
                            msg["requirement_id"],
                            msg["action"],
                            float(msg.get("t", 0.0)),
                            msg.get("label", ""),
                        )
                    except (NoOpenTagError, DuplicateOpenTagError, SessionClosedError, ValueError) as e:
                        await ws.send_json(
                            {"kind": "command_rejected", "error": type(e).__name__, "message": str(e)}
                        )
        except WebSocketDisconnect:
            pass
        finally:
            service.unsubscribe(session_id, live.put)

    return app
