"""HTTP API over the engine: sessions, turns, audit pages, approvals, and
knowledge-evidence lookup. One in-flight turn per session is enforced; every
mutation lands in the audit trail before the response is sent.
"""

from __future__ import annotations

import threading

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from millwright.engine import Engine
from millwright.errors import IntegrityError, MillwrightError


class TurnRequest(BaseModel):
    query: str = Field(min_length=1)


class ApprovalRequest(BaseModel):
    turn_id: str
    decision: str = Field(pattern="^(approved|override)$")
    note: str = ""


def create_app(engine: Engine) -> FastAPI:
    app = FastAPI(title="millwright", version="0.1.0")
    turn_locks: dict[str, threading.Lock] = {}

    def lock_for(session_id: str) -> threading.Lock:
        return turn_locks.setdefault(session_id, threading.Lock())

    @app.post("/sessions")
    def create_session() -> dict:
        return {"session_id": engine.new_session()}

    @app.post("/sessions/{session_id}/turns")
    def post_turn(session_id: str, request: TurnRequest) -> dict:
        try:
            engine.session(session_id)
        except MillwrightError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from None
        lock = lock_for(session_id)
        if not lock.acquire(blocking=False):
            raise HTTPException(status_code=409,
                                detail="a turn is already in flight for this session")
        try:
            result = engine.turn(session_id, request.query)
        except MillwrightError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from None
        finally:
            lock.release()
        return result.to_payload()

    @app.get("/sessions/{session_id}/audit")
    def get_audit(session_id: str, offset: int = 0, limit: int = 100) -> dict:
        try:
            state, _ = engine.session(session_id)
        except MillwrightError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from None
        events = state.audit.events
        page = events[offset:offset + limit]
        return {
            "total": len(events),
            "offset": offset,
            "events": [{
                "index": offset + i, "ts": e.ts, "actor": e.actor,
                "kind": e.kind, "digest": e.digest,
            } for i, e in enumerate(page)],
        }

    @app.post("/sessions/{session_id}/approvals")
    def post_approval(session_id: str, request: ApprovalRequest) -> dict:
        try:
            index = engine.approve(session_id, request.turn_id,
                                   request.decision, request.note)
        except MillwrightError as exc:
            detail = str(exc)
            status = 404 if "unknown" in detail else 409
            raise HTTPException(status_code=status, detail=detail) from None
        state, _ = engine.session(session_id)
        return {"event_index": index, "ts": state.audit.events[index].ts}

    @app.get("/kg/triples/{triple_id}")
    def get_triple(triple_id: str) -> dict:
        try:
            return engine.kg_evidence(triple_id)
        except (MillwrightError, IntegrityError) as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from None

    return app
