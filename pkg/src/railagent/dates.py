"""Relative-date and time-window resolution against an injected clock.

No function in this module (or anywhere date logic runs) reads ambient
system time; the current date-time is always an argument.  That keeps
date arithmetic deterministic under test and makes date failures
explicit and classifiable instead of silently wrong.
"""

from __future__ import annotations

from datetime import date, datetime, timedelta
from typing import Callable

# Current date-time supplier.  Production wiring passes a real reader at
# the composition root; everything below takes the value, not the callable.
Clock = Callable[[], datetime]


def fixed_clock(moment: datetime) -> Clock:
    return lambda: moment


class UnresolvableDateError(ValueError):
    """A time expression outside the supported vocabulary."""

    def __init__(self, expression: str):
        super().__init__(f"cannot resolve date expression: {expression!r}")
        self.expression = expression


class UnresolvableWindowError(ValueError):
    """A time-of-day expression outside the supported vocabulary."""

    def __init__(self, expression: str):
        super().__init__(f"cannot resolve time window: {expression!r}")
        self.expression = expression


_WEEKDAYS = {
    "monday": 0,
    "tuesday": 1,
    "wednesday": 2,
    "thursday": 3,
    "friday": 4,
    "saturday": 5,
    "sunday": 6,
}

# Coarse windows as [start, end) minutes since midnight.
NAMED_WINDOWS: dict[str, tuple[int, int]] = {
    "morning": (6 * 60, 12 * 60),
    "afternoon": (12 * 60, 18 * 60),
    "evening": (18 * 60, 24 * 60),
}


def resolve_date_expression(expression: str, today: date) -> date:
    """Resolve a relative or ISO date expression against ``today``.

    Supported: "today", "tomorrow", "day after tomorrow", weekday names
    (next strictly-future occurrence, with or without a leading "next"),
    and absolute ISO dates.  Anything else raises
    :class:`UnresolvableDateError`.
    """
    expr = expression.strip().lower()
    if not expr:
        raise UnresolvableDateError(expression)
    if expr == "today":
        return today
    if expr == "tomorrow":
        return today + timedelta(days=1)
    if expr in ("day after tomorrow", "the day after tomorrow"):
        return today + timedelta(days=2)
    weekday = expr.removeprefix("next ").strip()
    if weekday in _WEEKDAYS:
        ahead = (_WEEKDAYS[weekday] - today.weekday() - 1) % 7 + 1
        return today + timedelta(days=ahead)
    try:
        return date.fromisoformat(expr)
    except ValueError:
        raise UnresolvableDateError(expression) from None


def resolve_time_window(expression: str) -> tuple[int, int]:
    """Resolve a window expression to [start, end) minutes since midnight.

    Accepts the named spans in :data:`NAMED_WINDOWS` plus explicit
    "HH:MM-HH:MM" ranges ("24:00" allowed as an end bound).
    """
    expr = expression.strip().lower()
    if expr in NAMED_WINDOWS:
        return NAMED_WINDOWS[expr]
    if "-" in expr:
        start_raw, _, end_raw = expr.partition("-")
        try:
            start = _parse_minutes(start_raw)
            end = _parse_minutes(end_raw, allow_midnight_end=True)
        except ValueError:
            raise UnresolvableWindowError(expression) from None
        if not 0 <= start < end <= 24 * 60:
            raise UnresolvableWindowError(expression)
        return start, end
    raise UnresolvableWindowError(expression)


def _parse_minutes(raw: str, allow_midnight_end: bool = False) -> int:
    hours_raw, sep, minutes_raw = raw.strip().partition(":")
    if not sep:
        raise ValueError(raw)
    hours, minutes = int(hours_raw), int(minutes_raw)
    limit = 24 if allow_midnight_end else 23
    if not (0 <= hours <= limit and 0 <= minutes <= 59):
        raise ValueError(raw)
    total = hours * 60 + minutes
    if total > 24 * 60:
        raise ValueError(raw)
    return total


def minutes_of_day(moment: datetime) -> int:
    return moment.hour * 60 + moment.minute
