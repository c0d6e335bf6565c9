"""Resolve weather slots against an injected clock and fetch forecasts.

Run:  python3 demos/05_weather_slots.py
"""

from datetime import datetime

from railagent.config import data_path
from railagent.dates import fixed_clock
from railagent.grammar import SlotMap
from railagent.weather import FixtureProvider, get_weather, resolve_query

clock = fixed_clock(datetime(2025, 6, 9, 9, 0))
provider = FixtureProvider.from_file(data_path("weather_sample.yaml"), clock)

for place, time_expr in [
    ("Beijing", "tomorrow"),
    ("Chengdu", "today"),
    ("Shanghai", "2025-06-11"),
]:
    slots = SlotMap({"place": place, "time": time_expr})
    query = resolve_query(slots, clock(), known_cities=provider.known_cities())
    result = get_weather(query, provider)
    print(f"{place} / {time_expr!r} -> {result.text}")

# failures are observations, tagged for evaluation
for slots in (SlotMap({"place": "Atlantis", "time": "today"}),):
    try:
        resolve_query(slots, clock(), known_cities=provider.known_cities())
    except Exception as exc:
        print(f"{dict(slots)} -> {type(exc).__name__}: {exc}")
