"""Exercise station resolution and ticket queries directly.

Run:  python3 demos/04_ticket_search.py
"""

from datetime import date

from railagent.config import data_path
from railagent.dates import resolve_time_window
from railagent.ticketing import TicketQuery, load_timetable, query_tickets, resolve_station

timetable = load_timetable(data_path("timetable_sample.jsonl"))
travel_date = date(2025, 6, 10)

for name in ("Chongqing North Station", "Chongqing Station", "Atlantis Station"):
    print(f"resolve {name!r}: {resolve_station(name, timetable)}")
print()

queries = [
    ("exact pair, afternoon", TicketQuery(
        "Chongqing North Station", "Chengdu East Station", travel_date, resolve_time_window("afternoon")
    )),
    ("city pair (reroute case)", TicketQuery(
        "Chongqing Station", "Chengdu Station", travel_date, resolve_time_window("afternoon")
    )),
]
for label, query in queries:
    for error_info in (True, False):
        result = query_tickets(query, timetable, error_info=error_info)
        mode = "with error info" if error_info else "without error info"
        print(f"== {label}, {mode} [{result.kind}] ==")
        print(result.text)
        print()
