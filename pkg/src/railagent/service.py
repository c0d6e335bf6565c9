"""Session-scoped HTTP API over the agent runtime.

Endpoints:
    POST /api/sessions                         create a session from a profile
    POST /api/sessions/{id}/messages           run one round, return the answer
    GET  /api/sessions/{id}/traces/{round}     full step-by-step round trace
    GET  /api/health

Errors are returned as ``{"code": ..., "message": ...}``.  A second
message posted while a session's round is still running is rejected with
409; distinct sessions are served concurrently.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .engine import append_trace_log, trace_to_record
from .recommend import PassengerProfile
from .runtime import AgentRuntime
from .sessions import InMemorySessionStore, RoundInProgressError, SessionNotFoundError


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


class ProfileIn(BaseModel):
    passenger_id: str = Field(min_length=1)
    gender: str | None = None
    age: int | None = Field(default=None, ge=0, le=130)
    place_of_birth: str | None = None

    def to_domain(self) -> PassengerProfile:
        return PassengerProfile(
            passenger_id=self.passenger_id,
            gender=self.gender,
            age=self.age,
            place_of_birth=self.place_of_birth,
        )


class SessionOverridesIn(BaseModel):
    max_iterations: int | None = Field(default=None, ge=1)
    error_info_enabled: bool | None = None


class CreateSessionIn(BaseModel):
    profile: ProfileIn
    overrides: SessionOverridesIn | None = None


class MessageIn(BaseModel):
    text: str = Field(min_length=1)


def create_app(
    runtime: AgentRuntime,
    store: InMemorySessionStore,
    trace_log: str | None = None,
) -> FastAPI:
    """Build the app; ``trace_log`` appends every finished round to a
    line-delimited trace log alongside the session store."""
    app = FastAPI(title="railagent", docs_url=None, redoc_url=None)
    # the browser chat client may be hosted from a different origin
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    @app.exception_handler(ApiError)
    async def handle_api_error(request: Request, exc: ApiError) -> JSONResponse:
        del request
        return JSONResponse(
            status_code=exc.status, content={"code": exc.code, "message": exc.message}
        )

    @app.exception_handler(RequestValidationError)
    async def handle_validation(request: Request, exc: RequestValidationError) -> JSONResponse:
        del request
        return JSONResponse(
            status_code=400, content={"code": "validation_error", "message": str(exc.errors())}
        )

    @app.get("/api/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.post("/api/sessions")
    def create_session(body: CreateSessionIn) -> dict:
        overrides = body.overrides.model_dump(exclude_none=True) if body.overrides else {}
        session = store.create(body.profile.to_domain(), overrides)
        return {"session_id": session.session_id}

    @app.post("/api/sessions/{session_id}/messages")
    def post_message(session_id: str, body: MessageIn) -> dict:
        try:
            session = store.get(session_id)
        except SessionNotFoundError:
            raise ApiError(404, "session_not_found", f"no session {session_id!r}") from None
        try:
            with store.round_lock(session_id):
                trace = runtime.run_message(session, body.text)
                store.save(session)
                if trace_log:
                    append_trace_log(trace, trace_log)
        except RoundInProgressError:
            raise ApiError(
                409, "round_in_progress", "a round is already running for this session"
            ) from None
        return {
            "answer": trace.answer,
            "outcome": trace.outcome,
            "round_index": trace.round_index,
        }

    @app.get("/api/sessions/{session_id}/traces/{round_index}")
    def get_trace(session_id: str, round_index: int) -> dict:
        try:
            session = store.get(session_id)
        except SessionNotFoundError:
            raise ApiError(404, "session_not_found", f"no session {session_id!r}") from None
        if not 1 <= round_index <= len(session.history):
            raise ApiError(404, "trace_not_found", f"no round {round_index} in this session")
        return trace_to_record(session.history[round_index - 1])

    return app
