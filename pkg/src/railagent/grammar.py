"""Line-oriented output grammar for the agent loop.

The model is asked to reply in a fixed marker format::

    Thought: <free text>
    Action: <tool name>
    Action Input: <key=value, key=value, ...>

or, when it can answer directly::

    Thought: <free text>
    Final Answer: <answer text>

Markers are matched at the start of a line, case-insensitively, and the
first occurrence of each marker wins.  ``parse_agent_output`` turns raw
completions into :class:`AgentAction` values; ``render_agent_output`` is
its inverse and is what fixtures and tests use to author completions.
"""

from __future__ import annotations

import re
from collections.abc import Iterator, Mapping
from dataclasses import dataclass, field
from typing import Any, Union

# Canonical tool names the agent may route to.  Parsing normalizes case and
# surrounding whitespace but otherwise requires an exact name.
FOOD_AND_DRINK = "F&D Recommendation"
TICKETING = "Ticketing"
WEATHER = "Weather"
CHITCHAT = "ChitChat"
ACTION_SPACE: tuple[str, ...] = (FOOD_AND_DRINK, TICKETING, WEATHER, CHITCHAT)

MARKER_QUESTION = "Question:"
MARKER_THOUGHT = "Thought:"
MARKER_ACTION = "Action:"
MARKER_ACTION_INPUT = "Action Input:"
MARKER_OBSERVATION = "Observation:"
MARKER_FINAL_ANSWER = "Final Answer:"

# Order matters: "action input" must be tried before "action".
_MARKER_RE = re.compile(
    r"^[ \t]*(final answer|action input|action|thought|observation|question)[ \t]*:",
    re.IGNORECASE | re.MULTILINE,
)


class ParseError(ValueError):
    """Raised when a completion does not follow the output grammar."""


class SlotMap(Mapping[str, str]):
    """Ordered name -> value map for tool inputs.

    Slot names are case-normalized to lower case and must be non-empty;
    insertion order is preserved.
    """

    __slots__ = ("_entries",)

    def __init__(self, entries: Mapping[str, str] | None = None):
        self._entries: dict[str, str] = {}
        for name, value in (entries or {}).items():
            key = name.strip().lower()
            if not key:
                raise ValueError("slot names must be non-empty")
            if key in self._entries:
                raise ValueError(f"duplicate slot name: {key!r}")
            self._entries[key] = value

    def __getitem__(self, key: str) -> str:
        return self._entries[key.lower()]

    def __iter__(self) -> Iterator[str]:
        return iter(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def __repr__(self) -> str:
        return f"SlotMap({self._entries!r})"

    def __eq__(self, other: object) -> bool:
        if isinstance(other, SlotMap):
            return self._entries == other._entries
        if isinstance(other, Mapping):
            return self._entries == dict(other)
        return NotImplemented

    def __hash__(self) -> int:
        return hash(tuple(self._entries.items()))

    def merged_under(self, overrides: "SlotMap") -> "SlotMap":
        """Return a copy where ``overrides`` entries win over this map's."""
        merged = dict(self._entries)
        merged.update(overrides._entries)
        return SlotMap(merged)

    def to_text(self) -> str:
        return ", ".join(f"{k}={v}" for k, v in self._entries.items())

    @classmethod
    def from_text(cls, text: str) -> "SlotMap":
        """Parse a comma-separated ``key=value`` input line.

        A line with no ``=`` at all becomes the single slot ``query``.
        Comma-separated fragments without ``=`` are folded back into the
        preceding value (the comma belonged to the value).  On duplicate
        names the first occurrence wins.
        """
        text = text.strip()
        if not text:
            return cls()
        if "=" not in text:
            return cls({"query": text})
        pairs: list[tuple[str, str]] = []
        for part in text.split(","):
            if "=" in part:
                name, _, value = part.partition("=")
                pairs.append((name.strip().lower(), value.strip()))
            elif pairs:
                key, prev = pairs[-1]
                pairs[-1] = (key, f"{prev}, {part.strip()}")
            else:
                pairs.append(("query", part.strip()))
        entries: dict[str, str] = {}
        for key, value in pairs:
            if key and key not in entries:
                entries[key] = value
        return cls(entries)


@dataclass(frozen=True)
class FinalAnswer:
    """Terminal action: the model answers the passenger directly."""

    answer_text: str

    def __post_init__(self) -> None:
        if not self.answer_text.strip():
            raise ValueError("final answer text must be non-empty")


@dataclass(frozen=True)
class ToolCall:
    """Routing action: the model asks for one registered tool."""

    tool_name: str
    action_input: SlotMap = field(default_factory=SlotMap)


AgentAction = Union[FinalAnswer, ToolCall]

OBSERVATION_SUCCESS = "success"
OBSERVATION_ERROR = "error"


@dataclass(frozen=True)
class ObservationResult:
    """What a tool returned: a result or a described failure.

    ``text`` is what gets spliced into the next prompt iteration.  Error
    observations state the failure reason and, where the tool can tell,
    a suggested correction.  ``payload`` carries the tool's structured
    result for trace consumers (UI widgets, evaluation) and is never shown
    to the model directly.
    """

    kind: str
    text: str
    payload: dict[str, Any] | None = None

    def __post_init__(self) -> None:
        if self.kind not in (OBSERVATION_SUCCESS, OBSERVATION_ERROR):
            raise ValueError(f"unknown observation kind: {self.kind!r}")

    @property
    def is_error(self) -> bool:
        return self.kind == OBSERVATION_ERROR

    @classmethod
    def ok(cls, text: str, payload: dict[str, Any] | None = None) -> "ObservationResult":
        return cls(OBSERVATION_SUCCESS, text, payload)

    @classmethod
    def error(cls, text: str, payload: dict[str, Any] | None = None) -> "ObservationResult":
        return cls(OBSERVATION_ERROR, text, payload)


def _find_markers(raw: str) -> list[tuple[int, int, str]]:
    """All marker occurrences as (start, content_start, normalized_kind)."""
    return [(m.start(), m.end(), m.group(1).lower()) for m in _MARKER_RE.finditer(raw)]


def _first(markers: list[tuple[int, int, str]], kind: str) -> tuple[int, int] | None:
    for start, end, k in markers:
        if k == kind:
            return start, end
    return None


def _capture(raw: str, content_start: int, markers: list[tuple[int, int, str]]) -> str:
    """Text from ``content_start`` up to the next marker (any kind)."""
    end = len(raw)
    for start, _, _ in markers:
        if start >= content_start:
            end = start
            break
    return raw[content_start:end].strip()


def _normalize_tool_name(name: str, tool_names: tuple[str, ...]) -> str | None:
    wanted = name.strip().lower()
    for candidate in tool_names:
        if candidate.lower() == wanted:
            return candidate
    return None


def parse_agent_output(
    raw: str, tool_names: tuple[str, ...] = ACTION_SPACE
) -> tuple[str, AgentAction]:
    """Parse a raw completion into ``(thought, action)``.

    Raises :class:`ParseError` when there is no ``Thought:`` marker, when
    ``Action:`` names no recognizable tool, or when neither ``Action:``
    nor ``Final Answer:`` is present.  Callers perform at most one repair
    re-prompt before giving up on the round.
    """
    markers = _find_markers(raw)
    thought_pos = _first(markers, "thought")
    if thought_pos is None:
        raise ParseError("missing 'Thought:' marker")
    thought = _capture(raw, thought_pos[1], markers)

    answer_pos = _first(markers, "final answer")
    action_pos = _first(markers, "action")

    if answer_pos is not None and (action_pos is None or answer_pos[0] < action_pos[0]):
        answer = _capture(raw, answer_pos[1], markers)
        if not answer:
            raise ParseError("empty 'Final Answer:' text")
        return thought, FinalAnswer(answer)

    if action_pos is None:
        raise ParseError("neither 'Action:' nor 'Final Answer:' present")

    line_end = raw.find("\n", action_pos[1])
    if line_end == -1:
        line_end = len(raw)
    tool_raw = raw[action_pos[1] : line_end].strip()
    tool_name = _normalize_tool_name(tool_raw, tool_names)
    if tool_name is None:
        raise ParseError(f"unknown tool name: {tool_raw!r}")

    input_pos = _first(markers, "action input")
    if input_pos is None:
        slots = SlotMap()
    else:
        slots = SlotMap.from_text(_capture(raw, input_pos[1], markers))
    return thought, ToolCall(tool_name, slots)


def render_agent_output(thought: str, action: AgentAction) -> str:
    """Emit the grammar this module parses; inverse of ``parse_agent_output``."""
    if isinstance(action, FinalAnswer):
        return f"{MARKER_THOUGHT} {thought}\n{MARKER_FINAL_ANSWER} {action.answer_text}"
    return (
        f"{MARKER_THOUGHT} {thought}\n"
        f"{MARKER_ACTION} {action.tool_name}\n"
        f"{MARKER_ACTION_INPUT} {action.action_input.to_text()}"
    )
