"""The iterative question/thought/action/observation agent loop.

Each round starts from a base prompt plus the passenger's question.  The
model replies with a thought and either a final answer (ending the round)
or a tool call; the tool's observation is appended to the prompt and the
loop repeats, up to a fixed iteration budget.  Tool failures never abort
the round: they come back as error observations the model can react to,
which is what enables recovery behavior such as re-querying with an
alternative station pair.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

from .backends import CompletionBackend
from .grammar import (
    MARKER_FINAL_ANSWER,
    MARKER_OBSERVATION,
    MARKER_QUESTION,
    AgentAction,
    FinalAnswer,
    ObservationResult,
    ParseError,
    SlotMap,
    ToolCall,
    parse_agent_output,
    render_agent_output,
)
from .recommend import PassengerProfile

logger = logging.getLogger(__name__)

OUTCOME_ANSWERED = "answered"
OUTCOME_BUDGET_EXHAUSTED = "budget_exhausted"
OUTCOME_PARSE_FAILED = "parse_failed"
OUTCOME_TOOL_FAILED = "tool_failed"
OUTCOMES = frozenset(
    {OUTCOME_ANSWERED, OUTCOME_BUDGET_EXHAUSTED, OUTCOME_PARSE_FAILED, OUTCOME_TOOL_FAILED}
)

BRANCH_ANSWER = "answer"
BRANCH_INVOKE_TOOL = "invoke_tool"

DEFAULT_MAX_ITERATIONS = 5
DEFAULT_STOP_MARKERS = (MARKER_OBSERVATION, MARKER_QUESTION)

_REPAIR_REMINDER = (
    "\n\nYour previous reply did not follow the template. Reply again with a "
    "'Thought:' line followed by either 'Action:' and 'Action Input:' lines "
    "naming one available tool, or a 'Final Answer:' line."
)


class SlotExtractionError(RuntimeError):
    """Required tool inputs were still missing after the extraction re-prompt."""

    def __init__(self, tool_name: str, missing: Sequence[str]):
        super().__init__(f"missing required input(s) for {tool_name}: {', '.join(missing)}")
        self.tool_name = tool_name
        self.missing = tuple(missing)


@dataclass(frozen=True)
class BasePrompt:
    """The guideline text prepended to every iteration's prompt."""

    text: str
    tool_descriptions: tuple[tuple[str, str], ...]

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ValueError("base prompt text must be non-empty")
        names = [name for name, _ in self.tool_descriptions]
        if len(names) != len(set(names)):
            raise ValueError("tool names in the base prompt must be unique")


def make_base_prompt(tools: Iterable["ToolContract"], template: str | None = None) -> BasePrompt:
    """Render the guideline template for a concrete tool registry."""
    tools = list(tools)
    if template is None:
        template = (
            resources.files("railagent")
            .joinpath("data/templates/base_prompt.txt")
            .read_text(encoding="utf-8")
        )
    descriptions = "\n".join(f"- {t.name}: {t.description}" for t in tools)
    names = ", ".join(t.name for t in tools)
    return BasePrompt(
        text=template.format(tool_descriptions=descriptions, tool_names=names),
        tool_descriptions=tuple((t.name, t.description) for t in tools),
    )


@dataclass(frozen=True)
class QtaoStep:
    iteration_index: int
    thought: str
    action: AgentAction
    observation: ObservationResult | None

    def __post_init__(self) -> None:
        if self.iteration_index < 1:
            raise ValueError("iteration_index must be positive")
        is_tool_call = isinstance(self.action, ToolCall)
        if is_tool_call != (self.observation is not None):
            raise ValueError("observation must be present iff the action is a tool call")


@dataclass(frozen=True)
class QtaoTrace:
    round_index: int
    question: str
    steps: tuple[QtaoStep, ...]
    answer: str | None
    outcome: str

    def __post_init__(self) -> None:
        if self.round_index < 1:
            raise ValueError("round_index must be positive")
        if self.outcome not in OUTCOMES:
            raise ValueError(f"unknown outcome {self.outcome!r}")
        if (self.answer is not None) != (self.outcome == OUTCOME_ANSWERED):
            raise ValueError("answer must be present iff the round was answered")
        indexes = [s.iteration_index for s in self.steps]
        if indexes != sorted(set(indexes)):
            raise ValueError("step iteration indexes must be strictly increasing")
        if self.outcome == OUTCOME_ANSWERED:
            if not self.steps or not isinstance(self.steps[-1].action, FinalAnswer):
                raise ValueError("an answered round must end with a final-answer step")


@dataclass(frozen=True)
class ToolContract:
    """One callable tool: never raises past this boundary in the loop."""

    name: str
    description: str
    invoke: Callable[[SlotMap, "ConversationHistory"], ObservationResult]
    required_slots: tuple[str, ...] = ()


@dataclass(frozen=True)
class ConversationHistory:
    """Completed prior rounds plus the current question, as tools see them."""

    turns: tuple[QtaoTrace, ...] = ()
    question: str = ""
    profile: PassengerProfile | None = None

    def transcript(self) -> str:
        lines: list[str] = []
        for trace in self.turns:
            lines.append(f"Passenger: {trace.question}")
            if trace.answer is not None:
                lines.append(f"Agent: {trace.answer}")
        if self.question:
            lines.append(f"Passenger: {self.question}")
        return "\n".join(lines)

    @property
    def is_empty(self) -> bool:
        return not self.turns and not self.question.strip()


def build_prompt(
    base: BasePrompt,
    question: str,
    prior_steps: Sequence[QtaoStep],
    prior_rounds: Sequence[tuple[str, str]] = (),
) -> str:
    """Assemble the iteration prompt: base text, question, then each prior
    step's thought/action/observation in order.

    ``prior_rounds`` carries (question, answer) summaries of earlier rounds
    of the same session, rendered before the current question.
    """
    parts = [base.text.rstrip()]
    for prior_question, prior_answer in prior_rounds:
        parts.append(f"{MARKER_QUESTION} {prior_question}")
        parts.append(f"{MARKER_FINAL_ANSWER} {prior_answer}")
    parts.append(f"{MARKER_QUESTION} {question}")
    for step in prior_steps:
        if step.observation is None:
            raise ValueError("prior steps must be completed tool iterations")
        parts.append(render_agent_output(step.thought, step.action))
        parts.append(f"{MARKER_OBSERVATION} {step.observation.text}")
    return "\n".join(parts)


def decide_branch(thought: str, action: AgentAction) -> str:
    """Answer versus tool branch, decided purely by the action variant."""
    del thought  # the model's choice of variant is the decision
    return BRANCH_ANSWER if isinstance(action, FinalAnswer) else BRANCH_INVOKE_TOOL


def chitchat(backend: CompletionBackend, history: ConversationHistory, template: str | None = None) -> str:
    """Free conversation pass-through: the model's reply is the observation."""
    if history.is_empty:
        raise ValueError("no user utterance to chat about")
    if template is None:
        template = (
            resources.files("railagent")
            .joinpath("data/templates/chitchat.txt")
            .read_text(encoding="utf-8")
        )
    return backend.complete(template.format(history=history.transcript()))


@dataclass
class EngineConfig:
    max_iterations: int = DEFAULT_MAX_ITERATIONS
    repair_reprompts: int = 1
    stop_markers: tuple[str, ...] = DEFAULT_STOP_MARKERS

    def __post_init__(self) -> None:
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.repair_reprompts < 0:
            raise ValueError("repair_reprompts must be >= 0")


class AgentEngine:
    """Runs rounds of the loop against a backend and a tool registry.

    The engine holds no per-round mutable state; a single instance can
    serve many sessions concurrently as long as each session's rounds are
    serialized by the caller.
    """

    def __init__(
        self,
        backend: CompletionBackend,
        tools: Mapping[str, ToolContract],
        base_prompt: BasePrompt | None = None,
        config: EngineConfig | None = None,
    ):
        self.backend = backend
        self.tools = dict(tools)
        self.config = config or EngineConfig()
        self.base_prompt = base_prompt or make_base_prompt(self.tools.values())
        prompt_names = {name for name, _ in self.base_prompt.tool_descriptions}
        if prompt_names != set(self.tools):
            raise ValueError(
                f"base prompt tools {sorted(prompt_names)} do not match "
                f"registry {sorted(self.tools)}"
            )
        self._extract_template = (
            resources.files("railagent")
            .joinpath("data/templates/slot_extract.txt")
            .read_text(encoding="utf-8")
        )

    @property
    def tool_names(self) -> tuple[str, ...]:
        return tuple(self.tools)

    def run_round(self, session, question: str, budget: int | None = None) -> QtaoTrace:
        """Run one full round and append the finished trace to the session.

        Returns a trace whose outcome is ``answered``, ``budget_exhausted``
        (no final answer within the budget), or ``parse_failed`` (malformed
        output surviving the repair re-prompt).  Tool failures surface as
        error observations and the loop continues.
        """
        max_iterations = budget if budget is not None else self.config.max_iterations
        if max_iterations < 1:
            raise ValueError("budget must be >= 1")
        history = ConversationHistory(
            turns=tuple(session.history),
            question=question,
            profile=getattr(session, "profile", None),
        )
        prior_rounds = [
            (t.question, t.answer if t.answer is not None else f"(no answer: {t.outcome})")
            for t in session.history
        ]
        round_index = len(session.history) + 1

        steps: list[QtaoStep] = []
        answer: str | None = None
        outcome = OUTCOME_BUDGET_EXHAUSTED
        for iteration in range(1, max_iterations + 1):
            prompt = build_prompt(self.base_prompt, question, steps, prior_rounds)
            parsed = self._complete_and_parse(prompt)
            if parsed is None:
                outcome = OUTCOME_PARSE_FAILED
                break
            thought, action = parsed
            if decide_branch(thought, action) == BRANCH_ANSWER:
                assert isinstance(action, FinalAnswer)
                steps.append(QtaoStep(iteration, thought, action, None))
                answer = action.answer_text
                outcome = OUTCOME_ANSWERED
                break
            assert isinstance(action, ToolCall)
            observation, effective_call = self._dispatch(action, history)
            steps.append(QtaoStep(iteration, thought, effective_call, observation))

        trace = QtaoTrace(
            round_index=round_index,
            question=question,
            steps=tuple(steps),
            answer=answer,
            outcome=outcome,
        )
        session.history.append(trace)
        return trace

    def _complete_and_parse(self, prompt: str) -> tuple[str, AgentAction] | None:
        raw = self.backend.complete(prompt, self.config.stop_markers)
        attempts_left = self.config.repair_reprompts
        while True:
            try:
                return parse_agent_output(raw, self.tool_names)
            except ParseError as exc:
                if attempts_left <= 0:
                    logger.warning("round aborted, unparseable output: %s", exc)
                    return None
                attempts_left -= 1
                logger.info("repair re-prompt after parse failure: %s", exc)
                raw = self.backend.complete(prompt + _REPAIR_REMINDER, self.config.stop_markers)

    def _dispatch(
        self, call: ToolCall, history: ConversationHistory
    ) -> tuple[ObservationResult, ToolCall]:
        """Invoke a tool, completing missing required slots first.

        Returns the observation plus the tool call actually made (inline
        slots merged with any extracted ones), so the trace records what
        the tool really received.
        """
        contract = self.tools[call.tool_name]
        slots = call.action_input
        missing = [s for s in contract.required_slots if not slots.get(s, "").strip()]
        if missing:
            try:
                extracted = self.extract_action_input(history, contract.name)
                slots = extracted.merged_under(slots)
            except SlotExtractionError as exc:
                return (
                    ObservationResult.error(
                        f"cannot call {contract.name}: {exc}",
                        {"failure_slot": exc.missing[0], "missing_slots": list(exc.missing)},
                    ),
                    call,
                )
        effective_call = ToolCall(call.tool_name, slots)
        try:
            observation = contract.invoke(slots, history)
        except Exception as exc:  # tool bugs become observations, not aborts
            logger.exception("tool %s raised", contract.name)
            observation = ObservationResult.error(
                f"tool {contract.name} failed: {exc}", {"exception": type(exc).__name__}
            )
        return observation, effective_call

    def extract_action_input(self, history: ConversationHistory, tool_name: str) -> SlotMap:
        """Ask the model to pull a tool's inputs out of the whole history.

        Used when the inline action-input line is absent or incomplete.
        One re-prompt naming the missing slots, then
        :class:`SlotExtractionError`.
        """
        contract = self.tools[tool_name]
        if history.is_empty:
            raise SlotExtractionError(tool_name, contract.required_slots or ("query",))
        prompt = self._extract_template.format(
            tool=contract.name,
            slots=", ".join(contract.required_slots) or "query",
            history=history.transcript(),
        )
        reply = self.backend.complete(prompt, self.config.stop_markers)
        slots = SlotMap.from_text(reply.strip())
        missing = [s for s in contract.required_slots if not slots.get(s, "").strip()]
        if not missing:
            return slots
        retry_prompt = (
            prompt
            + f"\n\nYour reply was missing: {', '.join(missing)}. Reply again with "
            "one key=value line; include only keys the conversation answers."
        )
        reply = self.backend.complete(retry_prompt, self.config.stop_markers)
        retry_slots = SlotMap.from_text(reply.strip())
        slots = slots.merged_under(retry_slots)
        missing = [s for s in contract.required_slots if not slots.get(s, "").strip()]
        if missing:
            raise SlotExtractionError(tool_name, missing)
        return slots

    def chitchat(self, history: ConversationHistory) -> str:
        return chitchat(self.backend, history)


def action_to_record(action: AgentAction) -> dict:
    if isinstance(action, FinalAnswer):
        return {"variant": "final_answer", "answer": action.answer_text}
    return {
        "variant": "tool_call",
        "tool": action.tool_name,
        "input": dict(action.action_input),
    }


def action_from_record(record: Mapping) -> AgentAction:
    if record["variant"] == "final_answer":
        return FinalAnswer(record["answer"])
    return ToolCall(record["tool"], SlotMap(record.get("input") or {}))


def trace_to_record(trace: QtaoTrace) -> dict:
    """Canonical per-round record consumed by the service, UI, and harness."""
    steps = []
    for step in trace.steps:
        observation = None
        if step.observation is not None:
            observation = {
                "kind": step.observation.kind,
                "text": step.observation.text,
                "payload": step.observation.payload,
            }
        steps.append(
            {
                "iteration": step.iteration_index,
                "thought": step.thought,
                "action": action_to_record(step.action),
                "observation": observation,
            }
        )
    return {
        "round_index": trace.round_index,
        "question": trace.question,
        "steps": steps,
        "answer": trace.answer,
        "outcome": trace.outcome,
    }


def trace_from_record(record: Mapping) -> QtaoTrace:
    steps = []
    for raw in record["steps"]:
        observation = None
        if raw.get("observation") is not None:
            observation = ObservationResult(
                kind=raw["observation"]["kind"],
                text=raw["observation"]["text"],
                payload=raw["observation"].get("payload"),
            )
        steps.append(
            QtaoStep(
                iteration_index=raw["iteration"],
                thought=raw["thought"],
                action=action_from_record(raw["action"]),
                observation=observation,
            )
        )
    return QtaoTrace(
        round_index=record["round_index"],
        question=record["question"],
        steps=tuple(steps),
        answer=record.get("answer"),
        outcome=record["outcome"],
    )


def append_trace_log(trace: QtaoTrace, path: str | Path) -> None:
    """Append one canonical trace record to a line-delimited log file."""
    with Path(path).open("a", encoding="utf-8") as handle:
        handle.write(json.dumps(trace_to_record(trace), ensure_ascii=False, sort_keys=True) + "\n")


def read_trace_log(path: str | Path) -> list[QtaoTrace]:
    traces = []
    with Path(path).open(encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line:
                traces.append(trace_from_record(json.loads(line)))
    return traces
