"""Drive the HTTP session API in-process with a test client.

For a real server:  railagent serve --backend scripted \
    --scenario-script src/railagent/data/scripts/ticket_reroute.yaml

Run:  python3 demos/07_http_service.py
"""

from datetime import datetime

from fastapi.testclient import TestClient

from railagent.backends import ScriptedBackend, load_script
from railagent.config import AppConfig, data_path
from railagent.dates import fixed_clock
from railagent.runtime import AgentRuntime
from railagent.service import create_app
from railagent.sessions import InMemorySessionStore

clock = fixed_clock(datetime(2025, 6, 9, 9, 0))
backend = ScriptedBackend(load_script(data_path("scripts/ticket_reroute.yaml")))
runtime = AgentRuntime.build(AppConfig(), backend=backend, clock=clock)
app = create_app(runtime, InMemorySessionStore(clock))

with TestClient(app) as client:
    print("health:", client.get("/api/health").json())

    created = client.post(
        "/api/sessions", json={"profile": {"passenger_id": "demo-http", "age": 29}}
    ).json()
    session_id = created["session_id"]
    print("session:", session_id)

    reply = client.post(
        f"/api/sessions/{session_id}/messages",
        json={"text": "Are there any tickets from Chongqing to Chengdu tomorrow afternoon?"},
    ).json()
    print("answer:", reply["answer"][:90], "...")
    print("outcome:", reply["outcome"], "round:", reply["round_index"])

    trace = client.get(f"/api/sessions/{session_id}/traces/1").json()
    print(f"trace steps: {len(trace['steps'])}")
    for step in trace["steps"]:
        kind = step["observation"]["kind"] if step["observation"] else "final"
        print(f"  iteration {step['iteration']}: {step['action']['variant']} [{kind}]")
