"""Railway consulting agent: an iterative tool-using chat loop with
ticketing, weather, onboard dining recommendation, and an evaluation
harness."""

from .backends import LlmConfig, OpenAIChatBackend, ScriptedBackend, ScriptEntry, load_script
from .catalog import Corpus, DishItem, FeatureVector, Legend, encode_features, load_corpus
from .engine import (
    AgentEngine,
    BasePrompt,
    ConversationHistory,
    EngineConfig,
    QtaoStep,
    QtaoTrace,
    ToolContract,
    build_prompt,
    decide_branch,
)
from .grammar import (
    ACTION_SPACE,
    AgentAction,
    FinalAnswer,
    ObservationResult,
    SlotMap,
    ToolCall,
    parse_agent_output,
    render_agent_output,
)
from .recommend import (
    AlignedRecommendation,
    PassengerProfile,
    PreliminaryItem,
    RecTurn,
    align,
    recommend,
    similarity,
)
from .runtime import AgentRuntime
from .ticketing import TicketQuery, Timetable, load_timetable, query_tickets
from .weather import Forecast, WeatherQuery, get_weather, resolve_query

__version__ = "0.1.0"

__all__ = [
    "ACTION_SPACE",
    "AgentAction",
    "AgentEngine",
    "AgentRuntime",
    "AlignedRecommendation",
    "BasePrompt",
    "ConversationHistory",
    "Corpus",
    "DishItem",
    "EngineConfig",
    "FeatureVector",
    "FinalAnswer",
    "Forecast",
    "Legend",
    "LlmConfig",
    "ObservationResult",
    "OpenAIChatBackend",
    "PassengerProfile",
    "PreliminaryItem",
    "QtaoStep",
    "QtaoTrace",
    "RecTurn",
    "ScriptEntry",
    "ScriptedBackend",
    "SlotMap",
    "TicketQuery",
    "Timetable",
    "ToolCall",
    "ToolContract",
    "WeatherQuery",
    "align",
    "build_prompt",
    "decide_branch",
    "encode_features",
    "get_weather",
    "load_corpus",
    "load_script",
    "load_timetable",
    "parse_agent_output",
    "query_tickets",
    "recommend",
    "render_agent_output",
    "resolve_query",
    "similarity",
]
