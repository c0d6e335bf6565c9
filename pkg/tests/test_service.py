from __future__ import annotations

import json
import threading
import time

import pytest
from fastapi.testclient import TestClient

from railagent.backends import ScriptEntry, ScriptedBackend, load_script
from railagent.config import AppConfig, data_path
from railagent.engine import trace_to_record
from railagent.runtime import AgentRuntime
from railagent.service import create_app
from railagent.sessions import FileSessionStore, InMemorySessionStore

REROUTE_QUESTION = "Are there any tickets from Chongqing to Chengdu tomorrow afternoon?"

_PROFILE_BODY = {"profile": {"passenger_id": "p-100", "age": 31}}


def _reroute_runtime(clock):
    backend = ScriptedBackend(load_script(data_path("scripts/ticket_reroute.yaml")))
    return AgentRuntime.build(AppConfig(), backend=backend, clock=clock)


@pytest.fixture()
def client(clock):
    runtime = _reroute_runtime(clock)
    store = InMemorySessionStore(clock)
    app = create_app(runtime, store)
    with TestClient(app) as test_client:
        yield test_client, store


class TestHealthAndSessions:
    def test_health(self, client):
        http, _ = client
        assert http.get("/api/health").json() == {"status": "ok"}

    def test_create_session(self, client):
        http, store = client
        response = http.post("/api/sessions", json=_PROFILE_BODY)
        assert response.status_code == 200
        session_id = response.json()["session_id"]
        assert store.get(session_id).history == []

    def test_invalid_age_rejected_with_error_shape(self, client):
        http, _ = client
        response = http.post(
            "/api/sessions", json={"profile": {"passenger_id": "p", "age": 200}}
        )
        assert response.status_code == 400
        body = response.json()
        assert set(body) == {"code", "message"}
        assert body["code"] == "validation_error"

    def test_two_sessions_get_distinct_unguessable_ids(self, client):
        http, _ = client
        first = http.post("/api/sessions", json=_PROFILE_BODY).json()["session_id"]
        second = http.post("/api/sessions", json=_PROFILE_BODY).json()["session_id"]
        assert first != second
        assert len(first) >= 16


class TestMessages:
    def test_ticket_round_end_to_end(self, client):
        http, _ = client
        session_id = http.post("/api/sessions", json=_PROFILE_BODY).json()["session_id"]
        response = http.post(
            f"/api/sessions/{session_id}/messages", json={"text": REROUTE_QUESTION}
        )
        assert response.status_code == 200
        body = response.json()
        assert body["outcome"] == "answered"
        assert body["round_index"] == 1
        assert "G8503" in body["answer"] and "G8507" in body["answer"]

        trace = http.get(f"/api/sessions/{session_id}/traces/1").json()
        assert len(trace["steps"]) == 3

    def test_unknown_session(self, client):
        http, _ = client
        response = http.post("/api/sessions/nope/messages", json={"text": "hi"})
        assert response.status_code == 404
        assert response.json()["code"] == "session_not_found"

    def test_second_concurrent_message_rejected(self, clock):
        release = threading.Event()
        started = threading.Event()

        class SlowBackend:
            def complete(self, prompt, stop_markers=()):
                started.set()
                release.wait(timeout=5)
                return "Thought: done\nFinal Answer: finally here"

        runtime = AgentRuntime.build(AppConfig(), backend=SlowBackend(), clock=clock)
        store = InMemorySessionStore(clock)
        app = create_app(runtime, store)
        with TestClient(app) as http:
            session_id = http.post("/api/sessions", json=_PROFILE_BODY).json()["session_id"]
            results = {}

            def first_post():
                results["first"] = http.post(
                    f"/api/sessions/{session_id}/messages", json={"text": "slow one"}
                )

            worker = threading.Thread(target=first_post)
            worker.start()
            assert started.wait(timeout=5)
            second = http.post(f"/api/sessions/{session_id}/messages", json={"text": "again"})
            release.set()
            worker.join(timeout=5)

        assert second.status_code == 409
        assert second.json()["code"] == "round_in_progress"
        assert results["first"].status_code == 200

    def test_empty_text_rejected(self, client):
        http, _ = client
        session_id = http.post("/api/sessions", json=_PROFILE_BODY).json()["session_id"]
        response = http.post(f"/api/sessions/{session_id}/messages", json={"text": ""})
        assert response.status_code == 400


class TestTraces:
    def test_trace_fidelity_byte_identical(self, client):
        http, store = client
        session_id = http.post("/api/sessions", json=_PROFILE_BODY).json()["session_id"]
        http.post(f"/api/sessions/{session_id}/messages", json={"text": REROUTE_QUESTION})
        served = http.get(f"/api/sessions/{session_id}/traces/1").json()
        engine_record = trace_to_record(store.get(session_id).history[0])
        assert json.dumps(served, sort_keys=True) == json.dumps(engine_record, sort_keys=True)

    def test_missing_round_is_404(self, client):
        http, _ = client
        session_id = http.post("/api/sessions", json=_PROFILE_BODY).json()["session_id"]
        response = http.get(f"/api/sessions/{session_id}/traces/99")
        assert response.status_code == 404
        assert response.json()["code"] == "trace_not_found"

    def test_budget_exhausted_trace_has_steps_but_no_answer(self, clock):
        entries = [
            ScriptEntry(
                substring="Question:",
                completion=(
                    "Thought: still thinking\nAction: Ticketing\n"
                    "Action Input: from=Chongqing North Station, to=Chengdu East Station, date=tomorrow"
                ),
            )
        ]
        runtime = AgentRuntime.build(AppConfig(), backend=ScriptedBackend(entries), clock=clock)
        store = InMemorySessionStore(clock)
        app = create_app(runtime, store)
        with TestClient(app) as http:
            body = {"profile": {"passenger_id": "p"}, "overrides": {"max_iterations": 2}}
            session_id = http.post("/api/sessions", json=body).json()["session_id"]
            response = http.post(f"/api/sessions/{session_id}/messages", json={"text": "tickets"})
            assert response.json()["outcome"] == "budget_exhausted"
            assert response.json()["answer"] is None
            trace = http.get(f"/api/sessions/{session_id}/traces/1").json()
            assert len(trace["steps"]) == 2
            assert trace["answer"] is None


class TestTraceLog:
    def test_rounds_append_to_line_delimited_log(self, clock, tmp_path):
        from railagent.engine import read_trace_log

        log_path = tmp_path / "rounds.jsonl"
        runtime = _reroute_runtime(clock)
        store = InMemorySessionStore(clock)
        app = create_app(runtime, store, trace_log=str(log_path))
        with TestClient(app) as http:
            session_id = http.post("/api/sessions", json=_PROFILE_BODY).json()["session_id"]
            http.post(f"/api/sessions/{session_id}/messages", json={"text": REROUTE_QUESTION})
        [logged] = read_trace_log(log_path)
        assert logged == store.get(session_id).history[0]


class TestPersistence:
    def test_sessions_survive_restart(self, clock, tmp_path):
        runtime = _reroute_runtime(clock)
        store = FileSessionStore(tmp_path / "sessions", clock)
        with TestClient(create_app(runtime, store)) as http:
            session_id = http.post("/api/sessions", json=_PROFILE_BODY).json()["session_id"]
            http.post(f"/api/sessions/{session_id}/messages", json={"text": REROUTE_QUESTION})
            original = http.get(f"/api/sessions/{session_id}/traces/1").json()

        # simulate a process restart: fresh store and app over the same directory
        fresh_store = FileSessionStore(tmp_path / "sessions", clock)
        with TestClient(create_app(_reroute_runtime(clock), fresh_store)) as http:
            revived = http.get(f"/api/sessions/{session_id}/traces/1")
            assert revived.status_code == 200
            assert revived.json() == original
