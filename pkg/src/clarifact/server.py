"""HTTP JSON API over clarify sessions.

One session per claim: create it, read it, answer its clarifying question.
Every response body is either a session resource (all keys always present,
nulls where the state has not produced a value) or an error envelope
``{"error": {"code", "message", "retriable"}}``.
"""

from __future__ import annotations

import logging

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from clarifact.errors import (
    AuthFailure,
    BackendExhausted,
    ClarifactError,
    GatewayError,
    ParseError,
    RequestRejected,
    ScriptMiss,
    UnknownSessionId,
    WrongState,
)
from clarifact.pipeline import ClarifyService, ClarifySession

log = logging.getLogger(__name__)


class CreateSessionBody(BaseModel):
    statement: str


class AnswerBody(BaseModel):
    answer: str


def session_resource(session: ClarifySession) -> dict:
    """Project a session into its wire shape; keys are state-independent."""
    return {
        "id": session.session_id,
        "state": session.state.value,
        "statement": session.statement_text,
        "question": session.question,
        "categories": (
            None
            if session.categories is None
            else [
                {"letter": c.letter, "name": c.display_name}
                for c in session.categories
            ]
        ),
        "route": (
            None
            if session.route is None
            else {
                "value": session.route.value.value,
                "source": session.route.source.value,
            }
        ),
        "answer": session.answer,
        "verdict": (
            None
            if session.verdict is None
            else {"snapped": session.verdict.snapped, "label": session.verdict.label}
        ),
        "message": session.message,
        "error": session.error,
    }


def _envelope(status: int, code: str, message: str, retriable: bool) -> JSONResponse:
    return JSONResponse(
        status_code=status,
        content={"error": {"code": code, "message": message, "retriable": retriable}},
    )


def _backend_code(exc: ClarifactError) -> tuple[str, bool]:
    """Error code and whether the caller may usefully retry the request."""
    if isinstance(exc, AuthFailure):
        return "auth-failure", False
    if isinstance(exc, RequestRejected):
        return "request-rejected", False
    if isinstance(exc, ScriptMiss):
        return "script-miss", False
    if isinstance(exc, BackendExhausted):
        return "backend-exhausted", True
    if isinstance(exc, ParseError):
        return "unparseable-reply", True
    return "backend-failure", True


def create_app(service: ClarifyService) -> FastAPI:
    app = FastAPI(title="clarifact", docs_url=None, redoc_url=None)

    @app.exception_handler(RequestValidationError)
    async def on_invalid_body(request: Request, exc: RequestValidationError):
        return _envelope(400, "invalid-body", str(exc.errors()[:1]), False)

    @app.exception_handler(ValueError)
    async def on_value_error(request: Request, exc: ValueError):
        return _envelope(400, "invalid-input", str(exc), False)

    @app.exception_handler(UnknownSessionId)
    async def on_unknown_session(request: Request, exc: UnknownSessionId):
        return _envelope(404, "unknown-session", str(exc), False)

    @app.exception_handler(WrongState)
    async def on_wrong_state(request: Request, exc: WrongState):
        return _envelope(409, "wrong-state", str(exc), False)

    @app.exception_handler(GatewayError)
    async def on_gateway_error(request: Request, exc: GatewayError):
        code, retriable = _backend_code(exc)
        return _envelope(502, code, str(exc), retriable)

    @app.exception_handler(ParseError)
    async def on_parse_error(request: Request, exc: ParseError):
        code, retriable = _backend_code(exc)
        return _envelope(502, code, str(exc), retriable)

    @app.exception_handler(ClarifactError)
    async def on_unexpected(request: Request, exc: ClarifactError):
        log.exception("unhandled application error")
        return _envelope(500, "internal", str(exc), False)

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionBody) -> dict:
        return session_resource(service.begin_session(body.statement))

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str) -> dict:
        return session_resource(service.get_session(session_id))

    @app.post("/sessions/{session_id}/answer")
    def answer_session(session_id: str, body: AnswerBody) -> dict:
        return session_resource(service.answer_session(session_id, body.answer))

    return app
