from __future__ import annotations

import json
import random

import pytest

from railagent.backends import ScriptEntry, ScriptedBackend
from railagent.config import AppConfig, data_path
from railagent.engine import (
    OUTCOME_ANSWERED,
    OUTCOME_BUDGET_EXHAUSTED,
    OUTCOME_PARSE_FAILED,
    AgentEngine,
    BasePrompt,
    BRANCH_ANSWER,
    BRANCH_INVOKE_TOOL,
    ConversationHistory,
    EngineConfig,
    QtaoStep,
    QtaoTrace,
    SlotExtractionError,
    ToolContract,
    append_trace_log,
    build_prompt,
    chitchat,
    decide_branch,
    make_base_prompt,
    read_trace_log,
    trace_from_record,
    trace_to_record,
)
from railagent.grammar import (
    FinalAnswer,
    ObservationResult,
    SlotMap,
    ToolCall,
    render_agent_output,
)
from railagent.recommend import PassengerProfile
from railagent.runtime import AgentRuntime
from railagent.sessions import InMemorySessionStore


def _echo_tool(name="Weather", required=("place", "time")) -> ToolContract:
    def invoke(slots: SlotMap, history: ConversationHistory) -> ObservationResult:
        return ObservationResult.ok(f"echo {sorted(slots.items())}")

    return ToolContract(name=name, description="echoes its inputs", invoke=invoke, required_slots=tuple(required))


def _session():
    class _S:
        profile = PassengerProfile("unit")
        history: list = []

        def __init__(self):
            self.history = []

    return _S()


def _engine(entries, tools=None, **config_kwargs) -> AgentEngine:
    tools = tools if tools is not None else {"Weather": _echo_tool()}
    return AgentEngine(
        ScriptedBackend(entries), tools, config=EngineConfig(**config_kwargs)
    )


class TestBuildPrompt:
    def test_empty_history_is_base_plus_question(self):
        base = BasePrompt(text="GUIDE", tool_descriptions=(("Weather", "w"),))
        assert build_prompt(base, "Is it raining?", []) == "GUIDE\nQuestion: Is it raining?"

    def test_segments_in_order_with_steps(self):
        base = BasePrompt(text="GUIDE", tool_descriptions=(("Weather", "w"),))
        step = QtaoStep(
            1,
            "check the weather",
            ToolCall("Weather", SlotMap({"place": "Beijing", "time": "today"})),
            ObservationResult.ok("Sunny all day"),
        )
        text = build_prompt(base, "Is it raining?", [step])
        positions = [
            text.index("GUIDE"),
            text.index("Question: Is it raining?"),
            text.index("Thought: check the weather"),
            text.index("Action: Weather"),
            text.index("Action Input: place=Beijing, time=today"),
            text.index("Observation: Sunny all day"),
        ]
        assert positions == sorted(positions)
        assert len(set(positions)) == len(positions)

    def test_empty_question_is_legal(self):
        base = BasePrompt(text="GUIDE", tool_descriptions=())
        assert build_prompt(base, "", []) == "GUIDE\nQuestion: "

    def test_incomplete_prior_step_rejected(self):
        base = BasePrompt(text="GUIDE", tool_descriptions=())
        final_step = QtaoStep(1, "done", FinalAnswer("ok"), None)
        with pytest.raises(ValueError):
            build_prompt(base, "q", [final_step])

    def test_prior_rounds_render_before_current_question(self):
        base = BasePrompt(text="GUIDE", tool_descriptions=())
        text = build_prompt(base, "and tomorrow?", [], prior_rounds=[("weather today?", "Sunny.")])
        assert (
            text.index("GUIDE")
            < text.index("Question: weather today?")
            < text.index("Final Answer: Sunny.")
            < text.index("Question: and tomorrow?")
        )

    def test_marker_order_property_over_random_traces(self):
        rng = random.Random(404)
        base = make_base_prompt([_echo_tool()])
        for _ in range(100):
            steps = []
            for i in range(rng.randint(0, 5)):
                steps.append(
                    QtaoStep(
                        i + 1,
                        f"thought {i} {rng.randint(0, 999)}",
                        ToolCall("Weather", SlotMap({"place": f"city{i}", "time": "today"})),
                        ObservationResult.ok(f"obs {i} {rng.randint(0, 999)}"),
                    )
                )
            question = f"question {rng.randint(0, 999)}?"
            text = build_prompt(base, question, steps)
            cursor = text.index(base.text.rstrip())
            for marker in [f"Question: {question}"] + [
                m
                for step in steps
                for m in (
                    f"Thought: {step.thought}",
                    f"Action: {step.action.tool_name}",
                    f"Action Input: {step.action.action_input.to_text()}",
                    f"Observation: {step.observation.text}",
                )
            ]:
                position = text.index(marker, cursor + 1)
                assert position > cursor
                cursor = position


class TestDecideBranch:
    def test_final_answer_routes_to_answer(self):
        assert decide_branch("t", FinalAnswer("done")) == BRANCH_ANSWER

    def test_tool_call_routes_to_tool(self):
        assert decide_branch("t", ToolCall("Weather", SlotMap())) == BRANCH_INVOKE_TOOL

    def test_chitchat_is_a_tool_invocation(self):
        assert decide_branch("t", ToolCall("ChitChat", SlotMap())) == BRANCH_INVOKE_TOOL


_TOOL_THEN_ANSWER = [
    ScriptEntry(
        substring="Question: weather tomorrow in Beijing?",
        consume_once=True,
        completion=(
            "Thought: need the forecast\n"
            "Action: Weather\n"
            "Action Input: place=Beijing, time=tomorrow"
        ),
    ),
    ScriptEntry(
        substring="echo [('place', 'Beijing')",
        completion="Thought: got it\nFinal Answer: Sunny tomorrow in Beijing.",
    ),
]


class TestRunRound:
    def test_tool_then_answer(self):
        engine = _engine(_TOOL_THEN_ANSWER)
        session = _session()
        trace = engine.run_round(session, "weather tomorrow in Beijing?")
        assert trace.outcome == OUTCOME_ANSWERED
        assert trace.answer == "Sunny tomorrow in Beijing."
        assert len(trace.steps) == 2
        assert trace.steps[0].observation is not None
        assert trace.steps[1].observation is None
        assert session.history == [trace]

    def test_budget_exhaustion_with_adversarial_backend(self):
        keep_calling = [
            ScriptEntry(
                substring="Question:",
                completion=(
                    "Thought: still looking\nAction: Weather\n"
                    "Action Input: place=Beijing, time=today"
                ),
            )
        ]
        for budget in (1, 2, 3, 4):
            engine = _engine(keep_calling)
            session = _session()
            trace = engine.run_round(session, "never ends", budget=budget)
            assert trace.outcome == OUTCOME_BUDGET_EXHAUSTED
            assert trace.answer is None
            assert len(trace.steps) == budget

    def test_parse_failure_repaired_once(self):
        entries = [
            ScriptEntry(substring="Question:", completion="Sure! Let me help.", consume_once=True),
            ScriptEntry(
                substring="did not follow the template",
                completion="Thought: fixed\nFinal Answer: here you go",
            ),
        ]
        trace = _engine(entries).run_round(_session(), "anything")
        assert trace.outcome == OUTCOME_ANSWERED
        assert trace.answer == "here you go"

    def test_parse_failure_after_repair_aborts_round(self):
        entries = [
            ScriptEntry(substring="Question:", completion="nope", consume_once=True),
            ScriptEntry(substring="did not follow the template", completion="still nope"),
        ]
        trace = _engine(entries).run_round(_session(), "anything")
        assert trace.outcome == OUTCOME_PARSE_FAILED
        assert trace.answer is None
        assert trace.steps == ()

    def test_no_repair_budget_aborts_immediately(self):
        entries = [ScriptEntry(substring="Question:", completion="garbage")]
        trace = _engine(entries, repair_reprompts=0).run_round(_session(), "q")
        assert trace.outcome == OUTCOME_PARSE_FAILED

    def test_error_observation_keeps_the_loop_alive(self):
        def failing(slots, history):
            return ObservationResult.error("backend store unavailable, try later")

        tools = {
            "Weather": ToolContract("Weather", "w", failing, required_slots=()),
        }
        entries = [
            ScriptEntry(
                substring="Question:",
                consume_once=True,
                completion="Thought: ask\nAction: Weather\nAction Input: place=X, time=now",
            ),
            ScriptEntry(
                substring="store unavailable",
                completion="Thought: tool is down\nFinal Answer: please retry in a moment",
            ),
        ]
        trace = _engine(entries, tools=tools).run_round(_session(), "weather?")
        assert trace.outcome == OUTCOME_ANSWERED
        assert trace.steps[0].observation.is_error
        assert len(trace.steps) == 2

    def test_raising_tool_becomes_error_observation(self):
        def exploding(slots, history):
            raise RuntimeError("kaboom")

        tools = {"Weather": ToolContract("Weather", "w", exploding)}
        entries = [
            ScriptEntry(
                substring="Question:",
                consume_once=True,
                completion="Thought: t\nAction: Weather\nAction Input: place=X, time=now",
            ),
            ScriptEntry(
                substring="tool Weather failed",
                completion="Thought: give up\nFinal Answer: something went wrong",
            ),
        ]
        trace = _engine(entries, tools=tools).run_round(_session(), "q")
        assert trace.outcome == OUTCOME_ANSWERED
        assert trace.steps[0].observation.is_error
        assert "kaboom" in trace.steps[0].observation.text


class TestSlotExtraction:
    def test_missing_slot_filled_from_history(self):
        entries = [
            ScriptEntry(
                substring="Question:",
                consume_once=True,
                completion="Thought: t\nAction: Weather\nAction Input: place=Beijing",
            ),
            ScriptEntry(
                substring="Extract the inputs for a Weather request",
                completion="place=Shanghai, time=today",
            ),
            ScriptEntry(
                substring="echo [",
                completion="Thought: ok\nFinal Answer: done",
            ),
        ]
        engine = _engine(entries)
        trace = engine.run_round(_session(), "weather where I said?")
        call = trace.steps[0].action
        # the inline slot wins over the extracted one; extraction fills gaps
        assert call.action_input["place"] == "Beijing"
        assert call.action_input["time"] == "today"

    def test_extraction_example_weather_slots(self):
        entries = [
            ScriptEntry(
                substring="Extract the inputs for a Weather request",
                completion="time=tomorrow, place=Beijing",
            )
        ]
        engine = _engine(entries)
        history = ConversationHistory(question="What's the weather in Beijing tomorrow?")
        slots = engine.extract_action_input(history, "Weather")
        assert dict(slots) == {"time": "tomorrow", "place": "Beijing"}

    def test_two_round_history_merges_slot_sources(self):
        entries = [
            ScriptEntry(
                substring="Extract the inputs for a Weather request",
                completion="place=Beijing, time=tomorrow",
            )
        ]
        engine = _engine(entries)
        earlier = QtaoTrace(
            1,
            "I'm heading to Beijing",
            (QtaoStep(1, "chit", FinalAnswer("Nice city!"), None),),
            "Nice city!",
            OUTCOME_ANSWERED,
        )
        history = ConversationHistory(turns=(earlier,), question="what's the weather tomorrow?")
        slots = engine.extract_action_input(history, "Weather")
        assert dict(slots) == {"place": "Beijing", "time": "tomorrow"}

    def test_still_missing_after_reprompt_is_error_observation(self):
        entries = [
            ScriptEntry(
                substring="Question:",
                consume_once=True,
                completion="Thought: t\nAction: Weather\nAction Input: place=Beijing",
            ),
            ScriptEntry(
                substring="Extract the inputs for a Weather request",
                completion="place=Beijing",
                consume_once=True,
            ),
            ScriptEntry(
                substring="Your reply was missing: time",
                completion="place=Beijing",
            ),
            ScriptEntry(
                substring="missing required input",
                completion="Thought: cannot proceed\nFinal Answer: when do you mean?",
            ),
        ]
        trace = _engine(entries).run_round(_session(), "weather?")
        observation = trace.steps[0].observation
        assert observation.is_error
        assert observation.payload["missing_slots"] == ["time"]
        assert trace.outcome == OUTCOME_ANSWERED

    def test_empty_history_raises(self):
        engine = _engine([ScriptEntry(substring="x", completion="y")])
        with pytest.raises(SlotExtractionError):
            engine.extract_action_input(ConversationHistory(), "Weather")


class TestChitchat:
    def test_pass_through(self):
        backend = ScriptedBackend(
            [ScriptEntry(substring="Recommend a movie", completion="How about a classic western?")]
        )
        history = ConversationHistory(question="Recommend a movie for the trip")
        assert chitchat(backend, history) == "How about a classic western?"

    def test_empty_history_rejected(self):
        backend = ScriptedBackend([ScriptEntry(substring="x", completion="y")])
        with pytest.raises(ValueError, match="no user utterance"):
            chitchat(backend, ConversationHistory())

    def test_scripted_sports_reply(self):
        backend = ScriptedBackend(
            [
                ScriptEntry(
                    substring="who won the match",
                    completion="The home side took it 2-1 after a late goal.",
                )
            ]
        )
        history = ConversationHistory(question="Any idea who won the match yesterday?")
        assert chitchat(backend, history) == "The home side took it 2-1 after a late goal."


class TestTraceSerialization:
    def _trace(self) -> QtaoTrace:
        return QtaoTrace(
            round_index=1,
            question="weather?",
            steps=(
                QtaoStep(
                    1,
                    "check",
                    ToolCall("Weather", SlotMap({"place": "Beijing", "time": "today"})),
                    ObservationResult.ok("Sunny", {"forecast": {"city": "Beijing"}}),
                ),
                QtaoStep(2, "answer", FinalAnswer("Sunny today."), None),
            ),
            answer="Sunny today.",
            outcome=OUTCOME_ANSWERED,
        )

    def test_record_round_trip(self):
        trace = self._trace()
        assert trace_from_record(trace_to_record(trace)) == trace

    def test_record_shape(self):
        record = trace_to_record(self._trace())
        assert set(record) == {"round_index", "question", "steps", "answer", "outcome"}
        assert record["steps"][0]["action"]["variant"] == "tool_call"
        assert record["steps"][0]["observation"]["kind"] == "success"
        assert record["steps"][0]["observation"]["payload"] == {"forecast": {"city": "Beijing"}}
        assert record["steps"][1]["action"] == {"variant": "final_answer", "answer": "Sunny today."}
        assert record["steps"][1]["observation"] is None

    def test_log_file_round_trip(self, tmp_path):
        trace = self._trace()
        path = tmp_path / "rounds.jsonl"
        append_trace_log(trace, path)
        append_trace_log(trace, path)
        assert read_trace_log(path) == [trace, trace]


class TestTraceInvariants:
    def test_answer_requires_answered_outcome(self):
        with pytest.raises(ValueError):
            QtaoTrace(1, "q", (), "answer", OUTCOME_BUDGET_EXHAUSTED)

    def test_answered_round_must_end_with_final_answer(self):
        step = QtaoStep(1, "t", ToolCall("Weather", SlotMap()), ObservationResult.ok("x"))
        with pytest.raises(ValueError):
            QtaoTrace(1, "q", (step,), "answer", OUTCOME_ANSWERED)

    def test_observation_iff_tool_call(self):
        with pytest.raises(ValueError):
            QtaoStep(1, "t", FinalAnswer("a"), ObservationResult.ok("x"))
        with pytest.raises(ValueError):
            QtaoStep(1, "t", ToolCall("Weather", SlotMap()), None)

    def test_iteration_indexes_strictly_increasing(self):
        steps = (
            QtaoStep(2, "t", ToolCall("W", SlotMap()), ObservationResult.ok("x")),
            QtaoStep(1, "t", ToolCall("W", SlotMap()), ObservationResult.ok("x")),
        )
        with pytest.raises(ValueError):
            QtaoTrace(1, "q", steps, None, OUTCOME_BUDGET_EXHAUSTED)


REROUTE_QUESTION = "Are there any tickets from Chongqing to Chengdu tomorrow afternoon?"


def _reroute_runtime(clock):
    from railagent.backends import load_script

    backend = ScriptedBackend(load_script(data_path("scripts/ticket_reroute.yaml")))
    return AgentRuntime.build(AppConfig(), backend=backend, clock=clock)


class TestEndToEndRounds:
    def test_reroute_scenario_three_iterations(self, clock):
        runtime = _reroute_runtime(clock)
        store = InMemorySessionStore(clock)
        session = store.create(PassengerProfile("p1"))
        trace = runtime.run_message(session, REROUTE_QUESTION)

        assert trace.outcome == OUTCOME_ANSWERED
        assert len(trace.steps) == 3
        first, second, third = trace.steps
        assert first.observation.is_error
        assert "no direct train service exists" in first.observation.text
        assert not second.observation.is_error
        assert len(second.observation.payload["services"]) == 3
        assert isinstance(third.action, FinalAnswer)

    def test_weather_round_two_steps(self, clock):
        entries = [
            ScriptEntry(
                substring="weather in Beijing tomorrow",
                consume_once=True,
                completion=(
                    "Thought: forecast needed\nAction: Weather\n"
                    "Action Input: place=Beijing, time=tomorrow"
                ),
            ),
            ScriptEntry(
                substring="Beijing on 2025-06-10",
                completion="Thought: done\nFinal Answer: Sunny, 18 to 30 degrees.",
            ),
        ]
        runtime = AgentRuntime.build(AppConfig(), backend=ScriptedBackend(entries), clock=clock)
        session = InMemorySessionStore(clock).create(PassengerProfile("p2"))
        trace = runtime.run_message(session, "What's the weather in Beijing tomorrow?")
        assert trace.outcome == OUTCOME_ANSWERED
        assert len(trace.steps) == 2

    def test_round_is_deterministic_byte_identical(self, clock):
        records = []
        for _ in range(2):
            runtime = _reroute_runtime(clock)
            session = InMemorySessionStore(clock).create(PassengerProfile("p3"))
            trace = runtime.run_message(session, REROUTE_QUESTION)
            records.append(json.dumps(trace_to_record(trace), sort_keys=True))
        assert records[0] == records[1]

    def test_second_round_sees_prior_summary(self, clock):
        prompts: list[str] = []

        class RecordingBackend:
            def __init__(self, inner):
                self.inner = inner

            def complete(self, prompt, stop_markers=()):
                prompts.append(prompt)
                return self.inner.complete(prompt, stop_markers)

        entries = [
            ScriptEntry(
                substring="Question: hello there",
                completion="Thought: greet\nFinal Answer: Hello! How can I help?",
                consume_once=True,
            ),
            ScriptEntry(
                substring="Question: weather tomorrow?",
                completion="Thought: chat\nFinal Answer: Ask me with a city name, please.",
            ),
        ]
        backend = RecordingBackend(ScriptedBackend(entries))
        runtime = AgentRuntime.build(AppConfig(), backend=backend, clock=clock)
        session = InMemorySessionStore(clock).create(PassengerProfile("p4"))
        runtime.run_message(session, "hello there")
        runtime.run_message(session, "weather tomorrow?")
        final_prompt = prompts[-1]
        assert (
            final_prompt.index("Question: hello there")
            < final_prompt.index("Final Answer: Hello! How can I help?")
            < final_prompt.index("Question: weather tomorrow?")
        )
        assert len(session.history) == 2
        assert session.history[1].round_index == 2
