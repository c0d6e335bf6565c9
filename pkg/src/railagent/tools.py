"""Adapters that expose the domain services as agent tools.

Each adapter translates slot inputs into a domain call and renders the
result (or failure) as an observation.  Failures carry a ``failure_slot``
payload tag (station, city, date, time) so evaluation can classify what
went wrong without scraping message text.
"""

from __future__ import annotations

import logging
from typing import Mapping

from . import dates
from .backends import CompletionBackend
from .catalog import Corpus
from .dates import Clock
from .engine import ConversationHistory, ToolContract, chitchat
from .grammar import CHITCHAT, FOOD_AND_DRINK, TICKETING, WEATHER, ObservationResult, SlotMap
from .recommend import (
    EmptyRecommendationError,
    PassengerProfile,
    RecPromptTemplate,
    RecTurn,
    align,
    recommend_preliminary,
)
from .ticketing import TicketQuery, Timetable, query_tickets
from .weather import UnknownCityError, WeatherProvider, get_weather, resolve_query

logger = logging.getLogger(__name__)

_BARE_FAILURE = "no matching trains found"

ANONYMOUS_PROFILE = PassengerProfile(passenger_id="anonymous")


def ticketing_tool(timetable: Timetable, clock: Clock, error_info: bool = True) -> ToolContract:
    def invoke(slots: SlotMap, history: ConversationHistory) -> ObservationResult:
        del history
        today = clock().date()
        try:
            travel_date = dates.resolve_date_expression(slots["date"], today)
        except dates.UnresolvableDateError as exc:
            payload = {"failure_slot": "date", "expression": slots.get("date", "")}
            text = f"cannot resolve travel date: {exc}" if error_info else _BARE_FAILURE
            return ObservationResult.error(text, payload)
        if travel_date < today:
            payload = {"failure_slot": "date", "resolved": travel_date.isoformat()}
            text = (
                f"travel date {travel_date.isoformat()} is in the past"
                if error_info
                else _BARE_FAILURE
            )
            return ObservationResult.error(text, payload)
        window = None
        window_expr = slots.get("time", "").strip()
        if window_expr:
            try:
                window = dates.resolve_time_window(window_expr)
            except dates.UnresolvableWindowError as exc:
                payload = {"failure_slot": "time", "expression": window_expr}
                text = f"cannot resolve departure window: {exc}" if error_info else _BARE_FAILURE
                return ObservationResult.error(text, payload)
        query = TicketQuery(
            from_name=slots["from"], to_name=slots["to"], date=travel_date, window=window
        )
        return query_tickets(query, timetable, error_info=error_info)

    return ToolContract(
        name=TICKETING,
        description=(
            "search train tickets between two stations on a date; "
            "inputs: from, to, date, optional time "
            "(morning/afternoon/evening or HH:MM-HH:MM)"
        ),
        invoke=invoke,
        required_slots=("from", "to", "date"),
    )


def weather_tool(provider: WeatherProvider, clock: Clock) -> ToolContract:
    def invoke(slots: SlotMap, history: ConversationHistory) -> ObservationResult:
        del history
        try:
            query = resolve_query(slots, clock(), known_cities=provider.known_cities())
        except dates.UnresolvableDateError as exc:
            return ObservationResult.error(
                f"cannot resolve forecast date: {exc}",
                {"failure_slot": "date", "expression": slots.get("time", "")},
            )
        except UnknownCityError as exc:
            return ObservationResult.error(
                f"weather lookup failed: {exc}",
                {"failure_slot": "city", "place": slots.get("place", "")},
            )
        except KeyError as exc:
            return ObservationResult.error(str(exc.args[0]), {"failure_slot": "city"})
        return get_weather(query, provider)

    return ToolContract(
        name=WEATHER,
        description="get the weather forecast for a city; inputs: place, time",
        invoke=invoke,
        required_slots=("place", "time"),
    )


def _history_as_rec_turns(history: ConversationHistory) -> list[RecTurn]:
    turns: list[RecTurn] = []
    for trace in history.turns:
        turns.append(RecTurn("passenger", trace.question))
        if trace.answer:
            turns.append(RecTurn("agent", trace.answer))
    if history.question.strip():
        turns.append(RecTurn("passenger", history.question))
    return turns


def recommendation_tool(
    corpus: Corpus,
    backend: CompletionBackend,
    k: int = 3,
    template: RecPromptTemplate | None = None,
    weights: Mapping[str, float] | None = None,
) -> ToolContract:
    def invoke(slots: SlotMap, history: ConversationHistory) -> ObservationResult:
        turns = _history_as_rec_turns(history)
        if query := slots.get("query", "").strip():
            if not turns or turns[-1].utterance != query:
                turns.append(RecTurn("passenger", query))
        if not turns:
            return ObservationResult.error(
                "no passenger request to recommend from", {"failure_slot": "query"}
            )
        profile = history.profile or ANONYMOUS_PROFILE
        try:
            preliminary = recommend_preliminary(
                backend, profile, turns, k, corpus.legend, template
            )
        except EmptyRecommendationError as exc:
            return ObservationResult.error(f"recommendation failed: {exc}")
        aligned = align(preliminary, corpus, k, weights)
        lines = []
        for i, rec in enumerate(aligned, start=1):
            dish = rec.matched
            spice = "/".join(dish.spiciness)
            lines.append(
                f"{i}. {dish.name} ({dish.restaurant}, {dish.city}) ¥{dish.price:g}, "
                f"spiciness: {spice}"
            )
        text = "Recommended items available to order:\n" + "\n".join(lines)
        payload = {
            "preliminary": [p.name for p in preliminary],
            "recommendations": [
                {
                    "item_id": rec.matched.item_id,
                    "name": rec.matched.name,
                    "restaurant": rec.matched.restaurant,
                    "city": rec.matched.city,
                    "price": rec.matched.price,
                    "spiciness": list(rec.matched.spiciness),
                    "source_name": rec.source.name,
                    "similarity": round(rec.similarity_score, 6),
                    "basis": rec.match_basis,
                }
                for rec in aligned
            ],
        }
        return ObservationResult.ok(text, payload)

    return ToolContract(
        name=FOOD_AND_DRINK,
        description=(
            "recommend food and drink the passenger can order to their seat, "
            "based on the conversation and profile; input: query (free text)"
        ),
        invoke=invoke,
        required_slots=(),
    )


def chitchat_tool(backend: CompletionBackend) -> ToolContract:
    def invoke(slots: SlotMap, history: ConversationHistory) -> ObservationResult:
        del slots
        try:
            return ObservationResult.ok(chitchat(backend, history))
        except ValueError as exc:
            return ObservationResult.error(str(exc))

    return ToolContract(
        name=CHITCHAT,
        description="general conversation on any topic outside the other tools; no inputs",
        invoke=invoke,
        required_slots=(),
    )


def build_tool_registry(
    timetable: Timetable,
    corpus: Corpus,
    weather_provider: WeatherProvider,
    backend: CompletionBackend,
    clock: Clock,
    error_info: bool = True,
    recommendation_k: int = 3,
    rec_template: RecPromptTemplate | None = None,
) -> dict[str, ToolContract]:
    """Assemble the full four-tool registry for one engine instance."""
    tools = [
        recommendation_tool(corpus, backend, k=recommendation_k, template=rec_template),
        ticketing_tool(timetable, clock, error_info=error_info),
        weather_tool(weather_provider, clock),
        chitchat_tool(backend),
    ]
    return {tool.name: tool for tool in tools}
