"""Session state and stores.

A session owns a passenger profile and an append-only list of completed
round traces.  Stores hand out per-session locks so at most one round
runs per session at a time while distinct sessions proceed concurrently.
The file-backed store persists every session after each round, so
sessions and traces survive a process restart.
"""

from __future__ import annotations

import json
import secrets
import threading
from contextlib import contextmanager
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Iterator

from .dates import Clock
from .engine import QtaoTrace, trace_from_record, trace_to_record
from .recommend import PassengerProfile


class SessionNotFoundError(KeyError):
    def __init__(self, session_id: str):
        super().__init__(session_id)
        self.session_id = session_id


class RoundInProgressError(RuntimeError):
    def __init__(self, session_id: str):
        super().__init__(f"a round is already running for session {session_id}")
        self.session_id = session_id


@dataclass
class SessionState:
    session_id: str
    profile: PassengerProfile
    created_at: datetime
    history: list[QtaoTrace] = field(default_factory=list)
    config_overrides: dict = field(default_factory=dict)


def _new_session_id() -> str:
    return secrets.token_urlsafe(16)


class InMemorySessionStore:
    def __init__(self, clock: Clock):
        self._clock = clock
        self._sessions: dict[str, SessionState] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()

    def create(
        self, profile: PassengerProfile, config_overrides: dict | None = None
    ) -> SessionState:
        session = SessionState(
            session_id=_new_session_id(),
            profile=profile,
            created_at=self._clock(),
            config_overrides=dict(config_overrides or {}),
        )
        with self._registry_lock:
            self._sessions[session.session_id] = session
            self._locks[session.session_id] = threading.Lock()
        self.save(session)
        return session

    def get(self, session_id: str) -> SessionState:
        with self._registry_lock:
            session = self._sessions.get(session_id)
        if session is None:
            raise SessionNotFoundError(session_id)
        return session

    def save(self, session: SessionState) -> None:  # overridden by persistent stores
        pass

    @contextmanager
    def round_lock(self, session_id: str) -> Iterator[None]:
        """Serialize rounds per session; a held lock means a round is running."""
        with self._registry_lock:
            if session_id not in self._locks:
                raise SessionNotFoundError(session_id)
            lock = self._locks[session_id]
        if not lock.acquire(blocking=False):
            raise RoundInProgressError(session_id)
        try:
            yield
        finally:
            lock.release()


def _session_to_record(session: SessionState) -> dict:
    profile = session.profile
    return {
        "session_id": session.session_id,
        "profile": {
            "passenger_id": profile.passenger_id,
            "gender": profile.gender,
            "age": profile.age,
            "place_of_birth": profile.place_of_birth,
        },
        "created_at": session.created_at.isoformat(),
        "config_overrides": session.config_overrides,
        "traces": [trace_to_record(t) for t in session.history],
    }


def _session_from_record(record: dict) -> SessionState:
    profile_raw = record["profile"]
    return SessionState(
        session_id=record["session_id"],
        profile=PassengerProfile(
            passenger_id=profile_raw["passenger_id"],
            gender=profile_raw.get("gender"),
            age=profile_raw.get("age"),
            place_of_birth=profile_raw.get("place_of_birth"),
        ),
        created_at=datetime.fromisoformat(record["created_at"]),
        history=[trace_from_record(t) for t in record["traces"]],
        config_overrides=dict(record.get("config_overrides") or {}),
    )


class FileSessionStore(InMemorySessionStore):
    """One JSON file per session under a directory; loaded lazily on get."""

    def __init__(self, directory: str | Path, clock: Clock):
        super().__init__(clock)
        self._directory = Path(directory)
        self._directory.mkdir(parents=True, exist_ok=True)

    def _path_for(self, session_id: str) -> Path:
        return self._directory / f"{session_id}.json"

    def save(self, session: SessionState) -> None:
        path = self._path_for(session.session_id)
        tmp = path.with_suffix(".json.tmp")
        tmp.write_text(
            json.dumps(_session_to_record(session), ensure_ascii=False, sort_keys=True),
            encoding="utf-8",
        )
        tmp.replace(path)

    def get(self, session_id: str) -> SessionState:
        try:
            return super().get(session_id)
        except SessionNotFoundError:
            path = self._path_for(session_id)
            if not path.exists():
                raise
            session = _session_from_record(json.loads(path.read_text(encoding="utf-8")))
            with self._registry_lock:
                self._sessions.setdefault(session.session_id, session)
                self._locks.setdefault(session.session_id, threading.Lock())
            return self._sessions[session_id]
