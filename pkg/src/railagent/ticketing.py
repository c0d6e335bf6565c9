"""Timetable store and ticket query engine.

Station search is exact on normalized names with a city-group fallback:
"Chongqing Station" resolves to the whole Chongqing group when no station
carries that exact name.  Queries return the top 3 matching departures;
when the requested pair has no direct service, the error observation can
suggest the city-group alternative with the most services that day, which
is what lets the agent loop recover and re-query.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import date as Date
from datetime import datetime, time, timedelta
from pathlib import Path
from typing import Iterable, Union

from . import dates
from .grammar import ObservationResult

TOP_N = 3


class TimetableError(ValueError):
    def __init__(self, message: str, row: int | None = None):
        prefix = f"row {row}: " if row is not None else ""
        super().__init__(prefix + message)
        self.row = row


def _normalize(name: str) -> str:
    return " ".join(name.casefold().split())


@dataclass(frozen=True)
class Station:
    station_id: str
    name: str
    city: str


@dataclass(frozen=True)
class SeatClass:
    name: str
    remaining: int
    price: float

    def __post_init__(self) -> None:
        if self.remaining < 0:
            raise TimetableError(f"seat count must be >= 0: {self.name}")
        if self.price < 0:
            raise TimetableError(f"seat price must be >= 0: {self.name}")


@dataclass(frozen=True)
class ScheduledService:
    """A daily service pattern; concrete datetimes come from the query date."""

    train_no: str
    dep_station_id: str
    arr_station_id: str
    dep_time: time
    arr_time: time
    seat_classes: tuple[SeatClass, ...]


@dataclass(frozen=True)
class TrainService:
    train_no: str
    dep_station: Station
    arr_station: Station
    dep_time: datetime
    arr_time: datetime
    seat_classes: tuple[SeatClass, ...]

    def __post_init__(self) -> None:
        if self.arr_time <= self.dep_time:
            raise TimetableError(f"arrival must be after departure: {self.train_no}")

    def describe(self) -> str:
        seats = "; ".join(
            f"{s.name} ¥{s.price:g} ({s.remaining} left)" for s in self.seat_classes
        )
        return (
            f"{self.train_no} {self.dep_station.name} {self.dep_time:%H:%M} -> "
            f"{self.arr_station.name} {self.arr_time:%H:%M} | {seats}"
        )

    def to_record(self) -> dict:
        return {
            "train_no": self.train_no,
            "from": self.dep_station.name,
            "to": self.arr_station.name,
            "dep_time": self.dep_time.isoformat(),
            "arr_time": self.arr_time.isoformat(),
            "seats": [[s.name, s.remaining, s.price] for s in self.seat_classes],
        }


@dataclass(frozen=True)
class TicketQuery:
    from_name: str
    to_name: str
    date: Date
    window: tuple[int, int] | None = None  # [start, end) minutes since midnight


@dataclass(frozen=True)
class ExactMatch:
    station: Station


@dataclass(frozen=True)
class CityGroupMatch:
    city: str
    stations: tuple[Station, ...]


@dataclass(frozen=True)
class NoMatch:
    name: str


StationResolution = Union[ExactMatch, CityGroupMatch, NoMatch]


class Timetable:
    """Immutable station/service store with city grouping."""

    def __init__(self, stations: Iterable[Station], services: Iterable[ScheduledService]):
        self.stations: tuple[Station, ...] = tuple(stations)
        self._by_id = {s.station_id: s for s in self.stations}
        self._by_name: dict[str, Station] = {}
        self._city_groups: dict[str, list[Station]] = {}
        for station in self.stations:
            key = _normalize(station.name)
            if key in self._by_name:
                raise TimetableError(f"duplicate station name: {station.name!r}")
            self._by_name[key] = station
            self._city_groups.setdefault(_normalize(station.city), []).append(station)
        for group in self._city_groups.values():
            group.sort(key=lambda s: s.station_id)

        self.services: tuple[ScheduledService, ...] = tuple(services)
        for service in self.services:
            for sid in (service.dep_station_id, service.arr_station_id):
                if sid not in self._by_id:
                    raise TimetableError(
                        f"service {service.train_no} references unknown station {sid!r}"
                    )

    def station(self, station_id: str) -> Station:
        return self._by_id[station_id]

    def city_group(self, city: str) -> tuple[Station, ...]:
        return tuple(self._city_groups.get(_normalize(city), ()))

    def resolve_station(self, name: str) -> StationResolution:
        """Exact normalized-name match, else city-group expansion, else NoMatch."""
        key = _normalize(name)
        if not key:
            return NoMatch(name)
        if key in self._by_name:
            return ExactMatch(self._by_name[key])
        city_key = key.removesuffix(" station").strip() or key
        group = self._city_groups.get(city_key)
        if group:
            return CityGroupMatch(city=group[0].city, stations=tuple(group))
        return NoMatch(name)

    def services_between(
        self, dep_station_id: str, arr_station_id: str, on: Date
    ) -> list[TrainService]:
        """Materialize the day's services for a station pair, in timetable order.

        Overnight arrivals roll to the next day.
        """
        out: list[TrainService] = []
        for svc in self.services:
            if svc.dep_station_id != dep_station_id or svc.arr_station_id != arr_station_id:
                continue
            dep_dt = datetime.combine(on, svc.dep_time)
            arr_date = on if svc.arr_time > svc.dep_time else on + timedelta(days=1)
            arr_dt = datetime.combine(arr_date, svc.arr_time)
            out.append(
                TrainService(
                    train_no=svc.train_no,
                    dep_station=self.station(dep_station_id),
                    arr_station=self.station(arr_station_id),
                    dep_time=dep_dt,
                    arr_time=arr_dt,
                    seat_classes=svc.seat_classes,
                )
            )
        return out


def resolve_station(name: str, store: Timetable) -> StationResolution:
    return store.resolve_station(name)


def load_timetable(path: str | Path) -> Timetable:
    """Load a line-delimited timetable fixture (station and service records)."""
    stations: list[Station] = []
    services: list[ScheduledService] = []
    with Path(path).open(encoding="utf-8") as handle:
        for row, line in enumerate(handle, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise TimetableError(f"invalid JSON: {exc}", row) from None
            kind = record.get("kind")
            try:
                if kind == "station":
                    stations.append(
                        Station(
                            station_id=str(record["id"]),
                            name=str(record["name"]),
                            city=str(record["city"]),
                        )
                    )
                elif kind == "service":
                    services.append(
                        ScheduledService(
                            train_no=str(record["train_no"]),
                            dep_station_id=str(record["from"]),
                            arr_station_id=str(record["to"]),
                            dep_time=time.fromisoformat(record["dep"]),
                            arr_time=time.fromisoformat(record["arr"]),
                            seat_classes=tuple(
                                SeatClass(str(n), int(c), float(p))
                                for n, c, p in record["seats"]
                            ),
                        )
                    )
                else:
                    raise TimetableError(f"unknown record kind {kind!r}", row)
            except (KeyError, TypeError, ValueError) as exc:
                if isinstance(exc, TimetableError):
                    raise
                raise TimetableError(f"malformed record: {exc}", row) from None
    return Timetable(stations, services)


def _in_window(service: TrainService, window: tuple[int, int] | None) -> bool:
    if window is None:
        return True
    start, end = window
    return start <= dates.minutes_of_day(service.dep_time) < end


def _sorted_top(services: list[TrainService]) -> list[TrainService]:
    return sorted(services, key=lambda s: (s.dep_time, s.train_no))[:TOP_N]


def _window_text(window: tuple[int, int] | None) -> str:
    if window is None:
        return ""
    start, end = window
    return f" between {start // 60:02d}:{start % 60:02d} and {end // 60:02d}:{end % 60:02d}"


_BARE_FAILURE = "no matching trains found"


def query_tickets(query: TicketQuery, store: Timetable, error_info: bool = True) -> ObservationResult:
    """Run one ticket search; failures come back as error observations.

    With ``error_info`` enabled the error text explains what went wrong and
    suggests the best alternative station pair; with it disabled only a
    bare no-result line is returned (the structured payload keeps the
    diagnosis either way, for evaluation).
    """
    dep_res = store.resolve_station(query.from_name)
    arr_res = store.resolve_station(query.to_name)

    for raw_name, resolution in ((query.from_name, dep_res), (query.to_name, arr_res)):
        if isinstance(resolution, NoMatch):
            payload = {"failure_slot": "station", "unresolved_station": raw_name}
            if not error_info:
                return ObservationResult.error(_BARE_FAILURE, payload)
            return ObservationResult.error(
                f"unknown station: no station or city named {raw_name!r} is served", payload
            )

    if isinstance(dep_res, ExactMatch) and isinstance(arr_res, ExactMatch):
        day_services = store.services_between(
            dep_res.station.station_id, arr_res.station.station_id, query.date
        )
        matches = [s for s in day_services if _in_window(s, query.window)]
        if matches:
            top = _sorted_top(matches)
            lines = [f"{i}. {svc.describe()}" for i, svc in enumerate(top, start=1)]
            text = (
                f"Top {len(top)} trains from {dep_res.station.name} to "
                f"{arr_res.station.name} on {query.date.isoformat()}:\n" + "\n".join(lines)
            )
            return ObservationResult.ok(
                text, {"services": [svc.to_record() for svc in top]}
            )
        if day_services:
            # Direct services exist that day, just not inside the window.
            earliest = min(day_services, key=lambda s: s.dep_time)
            payload = {
                "failure_slot": "time",
                "services_outside_window": len(day_services),
            }
            if not error_info:
                return ObservationResult.error(_BARE_FAILURE, payload)
            return ObservationResult.error(
                f"no train from {dep_res.station.name} to {arr_res.station.name} departs"
                f"{_window_text(query.window)} on {query.date.isoformat()}; "
                f"{len(day_services)} service(s) run at other times, earliest at "
                f"{earliest.dep_time:%H:%M}",
                payload,
            )

    dep_group = (
        (dep_res.station,) if isinstance(dep_res, ExactMatch) else dep_res.stations
    )
    arr_group = (
        (arr_res.station,) if isinstance(arr_res, ExactMatch) else arr_res.stations
    )
    best_pair: tuple[Station, Station] | None = None
    best_count = 0
    for dep_station in dep_group:
        for arr_station in arr_group:
            count = len(
                store.services_between(dep_station.station_id, arr_station.station_id, query.date)
            )
            if count > best_count:
                best_pair, best_count = (dep_station, arr_station), count

    if best_pair is not None:
        payload = {
            "failure_slot": "station",
            "requested": [query.from_name, query.to_name],
            "suggestion": {
                "from": best_pair[0].name,
                "to": best_pair[1].name,
                "services_that_day": best_count,
            },
        }
        if not error_info:
            return ObservationResult.error(_BARE_FAILURE, payload)
        return ObservationResult.error(
            f"no direct train service exists between {query.from_name} and {query.to_name} "
            f"on {query.date.isoformat()}; the closest alternative route is "
            f"{best_pair[0].name} to {best_pair[1].name} "
            f"({best_count} service(s) that day)",
            payload,
        )

    payload = {"failure_slot": "station", "requested": [query.from_name, query.to_name]}
    if not error_info:
        return ObservationResult.error(_BARE_FAILURE, payload)
    return ObservationResult.error(
        f"no train service found between any {query.from_name!r} and {query.to_name!r} "
        f"stations on {query.date.isoformat()}",
        payload,
    )
