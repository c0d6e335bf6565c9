"""Walk through one full agent round: the rerouted ticket search.

The passenger asks for "Chongqing to Chengdu tomorrow afternoon". Neither
"Chongqing Station" nor "Chengdu Station" exists in the timetable, so the
first search fails; the error observation names the best alternative pair,
the scripted model re-queries it, and the third iteration answers.

Run:  python3 demos/01_agent_loop.py
"""

from datetime import datetime

from railagent.backends import ScriptedBackend, load_script
from railagent.config import AppConfig, data_path
from railagent.dates import fixed_clock
from railagent.recommend import PassengerProfile
from railagent.runtime import AgentRuntime
from railagent.sessions import InMemorySessionStore

clock = fixed_clock(datetime(2025, 6, 9, 9, 0))
backend = ScriptedBackend(load_script(data_path("scripts/ticket_reroute.yaml")))
runtime = AgentRuntime.build(AppConfig(), backend=backend, clock=clock)

store = InMemorySessionStore(clock)
session = store.create(PassengerProfile(passenger_id="demo", age=29))

question = "Are there any tickets from Chongqing to Chengdu tomorrow afternoon?"
print(f"Passenger: {question}\n")
trace = runtime.run_message(session, question)

for step in trace.steps:
    print(f"--- iteration {step.iteration_index} ---")
    print(f"Thought: {step.thought}")
    if step.observation is not None:
        print(f"Action: {step.action.tool_name}")
        print(f"Action Input: {step.action.action_input.to_text()}")
        print(f"Observation [{step.observation.kind}]: {step.observation.text}\n")
    else:
        print(f"Final Answer: {step.action.answer_text}\n")

print(f"outcome: {trace.outcome}, iterations: {len(trace.steps)}")
