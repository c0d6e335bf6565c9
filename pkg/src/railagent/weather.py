"""Weather slot resolution and forecast providers.

``resolve_query`` turns the extracted {place, time} slots into a concrete
(city, date) pair against the injected clock; providers fetch the actual
forecast.  The live adapter speaks the Amap Open Platform weather API
(city-to-adcode lookup, then the forecast endpoint) and never invents
data: every field in a returned forecast is a projection of the upstream
response, and any upstream oddity is a provider error.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from datetime import date as Date
from datetime import datetime
from pathlib import Path
from typing import Mapping, Protocol

import httpx
import yaml

from .dates import Clock, resolve_date_expression
from .grammar import ObservationResult, SlotMap

logger = logging.getLogger(__name__)

AMAP_ENDPOINT = "https://restapi.amap.com/v3/weather/weatherInfo"

# Minimal city -> Amap adcode table for the live adapter; extend via config.
DEFAULT_ADCODES: dict[str, str] = {
    "beijing": "110000",
    "shanghai": "310000",
    "chongqing": "500000",
    "chengdu": "510100",
    "guangzhou": "440100",
    "shenzhen": "440300",
    "wuhan": "420100",
    "xian": "610100",
    "nanjing": "320100",
    "hangzhou": "330100",
}


class UnknownCityError(ValueError):
    def __init__(self, city: str):
        super().__init__(f"unknown city: {city!r}")
        self.city = city


@dataclass(frozen=True)
class ProviderError(Exception):
    kind: str  # "city" | "date" | "horizon" | "transport" | "upstream"
    message: str

    def __str__(self) -> str:
        return self.message


@dataclass(frozen=True)
class WeatherQuery:
    place: str
    date: Date

    def __post_init__(self) -> None:
        if not self.place.strip():
            raise ValueError("place must be non-empty")


@dataclass(frozen=True)
class Forecast:
    city: str
    date: Date
    condition: str
    temp_low: float
    temp_high: float
    wind: str
    source: str

    def __post_init__(self) -> None:
        if self.temp_low > self.temp_high:
            raise ValueError("temp_low must not exceed temp_high")

    def summary(self) -> str:
        return (
            f"{self.city} on {self.date.isoformat()}: {self.condition}, "
            f"{self.temp_low:g}°C to {self.temp_high:g}°C, wind {self.wind}"
        )

    def to_record(self) -> dict:
        return {
            "city": self.city,
            "date": self.date.isoformat(),
            "condition": self.condition,
            "temp_low": self.temp_low,
            "temp_high": self.temp_high,
            "wind": self.wind,
            "source": self.source,
        }


class WeatherProvider(Protocol):
    def fetch(self, city: str, on: Date) -> Forecast: ...

    def known_cities(self) -> frozenset[str] | None: ...


def resolve_query(slots: SlotMap, clock: datetime, known_cities: frozenset[str] | None = None) -> WeatherQuery:
    """Resolve {place, time} slots into a (city, date) query.

    Relative expressions resolve against the injected clock; absolute
    dates must be ISO.  When a city vocabulary is supplied, unknown
    places are rejected here rather than deep in the provider.
    """
    place = slots.get("place", "").strip()
    time_expr = slots.get("time", "").strip()
    if not place or not time_expr:
        missing = [name for name, value in (("place", place), ("time", time_expr)) if not value]
        raise KeyError(f"missing weather slot(s): {', '.join(missing)}")
    resolved = resolve_date_expression(time_expr, clock.date())
    if known_cities is not None and place.casefold() not in known_cities:
        raise UnknownCityError(place)
    return WeatherQuery(place=place, date=resolved)


def get_weather(query: WeatherQuery, provider: WeatherProvider) -> ObservationResult:
    """Fetch a forecast; provider failures become error observations."""
    try:
        forecast = provider.fetch(query.place, query.date)
    except ProviderError as err:
        failure_slot = {"city": "city", "date": "date", "horizon": "date"}.get(err.kind, err.kind)
        return ObservationResult.error(
            f"weather lookup failed: {err.message}",
            {"failure_slot": failure_slot, "provider_error": err.kind},
        )
    return ObservationResult.ok(forecast.summary(), {"forecast": forecast.to_record()})


class FixtureProvider:
    """File-backed provider used in tests and scripted evaluation runs."""

    def __init__(
        self,
        records: Mapping[str, Mapping[str, Forecast]],
        horizon_days: int,
        clock: Clock,
    ):
        self._records = {city.casefold(): dict(by_date) for city, by_date in records.items()}
        self.horizon_days = horizon_days
        self._clock = clock

    @classmethod
    def from_file(cls, path: str | Path, clock: Clock) -> "FixtureProvider":
        raw = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
        records: dict[str, dict[str, Forecast]] = {}
        for city, by_date in (raw.get("cities") or {}).items():
            records[city] = {}
            for iso, fields in by_date.items():
                records[city][str(iso)] = Forecast(
                    city=city,
                    date=Date.fromisoformat(str(iso)),
                    condition=str(fields["condition"]),
                    temp_low=float(fields["low"]),
                    temp_high=float(fields["high"]),
                    wind=str(fields["wind"]),
                    source="fixture",
                )
        return cls(records, horizon_days=int(raw.get("horizon_days", 3)), clock=clock)

    def known_cities(self) -> frozenset[str]:
        return frozenset(self._records)

    def fetch(self, city: str, on: Date) -> Forecast:
        by_date = self._records.get(city.casefold())
        if by_date is None:
            raise ProviderError("city", f"no forecast source for city {city!r}")
        days_ahead = (on - self._clock().date()).days
        if days_ahead > self.horizon_days:
            raise ProviderError(
                "horizon",
                f"forecast unavailable for date {on.isoformat()}: beyond the "
                f"{self.horizon_days}-day horizon",
            )
        forecast = by_date.get(on.isoformat())
        if forecast is None:
            raise ProviderError("date", f"no forecast recorded for {city} on {on.isoformat()}")
        return forecast


class AmapProvider:
    """Live adapter for the Amap weather API.

    The upstream reply carries a list of daily casts; the matching cast is
    projected field-for-field into a :class:`Forecast`.  Requires an API
    key in the configured environment variable.
    """

    def __init__(
        self,
        api_key: str,
        adcodes: Mapping[str, str] | None = None,
        client: httpx.Client | None = None,
        endpoint: str = AMAP_ENDPOINT,
    ):
        if not api_key:
            raise ValueError("Amap provider requires an API key")
        self._api_key = api_key
        self._adcodes = {k.casefold(): v for k, v in (adcodes or DEFAULT_ADCODES).items()}
        self._client = client or httpx.Client(timeout=10.0)
        self._endpoint = endpoint

    def known_cities(self) -> frozenset[str]:
        return frozenset(self._adcodes)

    def fetch(self, city: str, on: Date) -> Forecast:
        adcode = self._adcodes.get(city.casefold())
        if adcode is None:
            raise ProviderError("city", f"no adcode mapping for city {city!r}")
        try:
            response = self._client.get(
                self._endpoint,
                params={"key": self._api_key, "city": adcode, "extensions": "all"},
            )
            response.raise_for_status()
            body = response.json()
        except (httpx.HTTPError, json.JSONDecodeError) as exc:
            raise ProviderError("transport", f"weather API unreachable: {exc!r}") from exc
        if str(body.get("status")) != "1" or not body.get("forecasts"):
            raise ProviderError("upstream", f"weather API rejected the request: {body.get('info')}")
        forecast_block = body["forecasts"][0]
        for cast in forecast_block.get("casts", []):
            if cast.get("date") == on.isoformat():
                try:
                    return Forecast(
                        city=forecast_block.get("city", city),
                        date=on,
                        condition=str(cast["dayweather"]),
                        temp_low=float(cast["nighttemp"]),
                        temp_high=float(cast["daytemp"]),
                        wind=f"{cast.get('daywind', '?')} force {cast.get('daypower', '?')}",
                        source="amap",
                    )
                except (KeyError, ValueError) as exc:
                    raise ProviderError("upstream", f"malformed cast record: {exc!r}") from exc
        raise ProviderError(
            "horizon", f"forecast unavailable for date {on.isoformat()}: not in provider horizon"
        )
