"""HTTP session service: the optimization agent behind a JSON API.

Each session owns one model and one optimization-agent history; humans (or a
browser client) play the decision-maker. Only the optimization side is loaded
here — no utility machinery, since live users have no hidden utility. Turns
within a session are serialized: a second message during an active turn gets
a 409.
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

from fastapi import FastAPI, HTTPException
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .domain import Schedule, SchoolRecord, canonical_school_data
from .fmt import decimal_str, fmt_deviation, fmt_load
from .model import default_model, model_summary, solve
from .orchestrator import render_opening
from .runtime import (
    OptimizationAgentState,
    ProviderConfig,
    ProviderError,
    TurnError,
    build_optimization_prompt,
    make_provider,
)

SERVICE_DESIGN = "tpp"


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def schedule_rows(schedule: Schedule, data: Sequence[SchoolRecord]) -> list[dict]:
    return [{"school": rec.name, "start": schedule.label_of(rec.id)} for rec in data]


def objectives_payload(schedule: Schedule, data: Sequence[SchoolRecord]) -> dict:
    from .domain import compute_features

    features = compute_features(schedule, data)
    return {
        "peak_load": features.peak_load,
        "peak_load_hundreds": decimal_str(features.peak_load_hundreds),
        "avg_deviation_minutes": decimal_str(features.avg_deviation),
        "load_display": fmt_load(features.peak_load),
        "deviation_display": fmt_deviation(features.avg_deviation),
    }


@dataclass
class SessionState:
    id: str
    opt_state: OptimizationAgentState
    created_at: str
    updated_at: str
    history: list[dict] = field(default_factory=list)  # visible messages only
    presented: list[dict] = field(default_factory=list)
    turn_lock: threading.Lock = field(default_factory=threading.Lock)
    errored_turns: int = 0

    @property
    def turn_in_flight(self) -> bool:
        if self.turn_lock.acquire(blocking=False):
            self.turn_lock.release()
            return False
        return True


class MessageBody(BaseModel):
    text: str


def create_app(
    provider_cfg: ProviderConfig,
    data: Sequence[SchoolRecord] | None = None,
    snapshot_dir: str | Path | None = None,
) -> FastAPI:
    provider_cfg.validate()
    data = list(data) if data is not None else canonical_school_data()
    app = FastAPI(title="bellsched session service")
    sessions: dict[str, SessionState] = {}
    sessions_lock = threading.Lock()

    def get_session(session_id: str) -> SessionState:
        with sessions_lock:
            session = sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id!r}")
        return session

    @app.post("/sessions")
    def create_session() -> dict:
        session_id = uuid.uuid4().hex
        default_solution = solve(default_model(), data)
        opening_text, opening_schedule = render_opening(data)
        opt_state = OptimizationAgentState.create(
            provider=make_provider(provider_cfg),
            data=data,
            model=default_model(),
            system_prompt=build_optimization_prompt(SERVICE_DESIGN, data, default_solution),
            opening_text=opening_text,
            conversation_id=session_id,
        )
        now = _now()
        session = SessionState(session_id, opt_state, created_at=now, updated_at=now)
        session.history.append({"role": "assistant", "text": opening_text})
        session.presented.append(
            {"schedule": schedule_rows(opening_schedule, data),
             "objectives": objectives_payload(opening_schedule, data)}
        )
        with sessions_lock:
            sessions[session_id] = session
        return {
            "session_id": session_id,
            "opening": {
                "text": opening_text,
                "schedule": schedule_rows(opening_schedule, data),
                "objectives": objectives_payload(opening_schedule, data),
                "model_summary": model_summary(session.opt_state.model, data),
            },
        }

    @app.post("/sessions/{session_id}/messages")
    def post_message(session_id: str, body: MessageBody) -> JSONResponse:
        session = get_session(session_id)
        if not body.text.strip():
            raise HTTPException(status_code=422, detail="message text is empty")
        if not session.turn_lock.acquire(blocking=False):
            raise HTTPException(status_code=409, detail="a turn is already in flight")
        try:
            from .runtime import run_optimization_turn

            session.history.append({"role": "user", "text": body.text})
            try:
                result = run_optimization_turn(session.opt_state, body.text)
            except (ProviderError, TurnError) as exc:
                session.errored_turns += 1
                session.history.append({"role": "error", "text": str(exc)})
                session.updated_at = _now()
                return JSONResponse(
                    status_code=502,
                    content={"detail": f"provider failure: {exc}"},
                )
            session.history.append({"role": "assistant", "text": result.visible_text})
            schedules = [
                {"schedule": schedule_rows(s, data), "objectives": objectives_payload(s, data)}
                for s in result.schedules_presented
            ]
            session.presented.extend(schedules)
            session.updated_at = _now()
            return JSONResponse(
                {
                    "visible_text": result.visible_text,
                    "schedules": schedules,
                    "model_summary": model_summary(session.opt_state.model, data),
                    "solver_calls": result.solver_calls,
                }
            )
        finally:
            session.turn_lock.release()

    @app.get("/sessions/{session_id}")
    def get_history(session_id: str) -> dict:
        session = get_session(session_id)
        return {
            "session_id": session.id,
            "created_at": session.created_at,
            "updated_at": session.updated_at,
            "history": session.history,
            "presented": session.presented,
            "turn_in_flight": session.turn_in_flight,
        }

    @app.get("/sessions/{session_id}/status")
    def get_status(session_id: str) -> dict:
        session = get_session(session_id)
        return {"session_id": session.id, "turn_in_flight": session.turn_in_flight}

    @app.get("/sessions/{session_id}/model")
    def get_model(session_id: str) -> JSONResponse:
        session = get_session(session_id)
        return JSONResponse(json.loads(session.opt_state.model.to_json()))

    @app.delete("/sessions/{session_id}")
    def delete_session(session_id: str) -> dict:
        session = get_session(session_id)
        snapshot_path = None
        if snapshot_dir is not None:
            out = Path(snapshot_dir)
            out.mkdir(parents=True, exist_ok=True)
            path = out / f"session_{session.id}.jsonl"
            lines = [json.dumps({"history": h}, sort_keys=True) for h in session.history]
            path.write_text("\n".join(lines) + "\n", "utf-8")
            snapshot_path = str(path)
        with sessions_lock:
            sessions.pop(session_id, None)
        return {"deleted": True, "session_id": session_id, "snapshot": snapshot_path}

    return app
