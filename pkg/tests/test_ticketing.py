from __future__ import annotations

from datetime import date

import pytest

from railagent.dates import resolve_time_window
from railagent.ticketing import (
    CityGroupMatch,
    ExactMatch,
    NoMatch,
    ScheduledService,
    SeatClass,
    Station,
    TicketQuery,
    Timetable,
    TimetableError,
    load_timetable,
    query_tickets,
    resolve_station,
)

TRAVEL_DATE = date(2025, 6, 10)
AFTERNOON = resolve_time_window("afternoon")


class TestResolveStation:
    def test_exact_match(self, timetable):
        result = resolve_station("Chongqing North Station", timetable)
        assert isinstance(result, ExactMatch)
        assert result.station.station_id == "CQN"

    def test_city_group_expansion(self, timetable):
        result = resolve_station("Chongqing Station", timetable)
        assert isinstance(result, CityGroupMatch)
        assert result.city == "Chongqing"
        assert [s.station_id for s in result.stations] == ["CQN", "CQW"]

    def test_bare_city_name_expands_too(self, timetable):
        result = resolve_station("beijing", timetable)
        assert isinstance(result, CityGroupMatch)
        assert {s.station_id for s in result.stations} == {"BJS", "BJW"}

    def test_not_found(self, timetable):
        assert isinstance(resolve_station("Atlantis Station", timetable), NoMatch)

    def test_normalization_tolerates_case_and_spacing(self, timetable):
        assert isinstance(resolve_station("  chongqing  NORTH station ", timetable), ExactMatch)


class TestTimetableStore:
    def test_duplicate_station_name_rejected(self):
        stations = [Station("A", "Same Name", "X"), Station("B", "Same Name", "Y")]
        with pytest.raises(TimetableError, match="duplicate"):
            Timetable(stations, [])

    def test_service_with_unknown_station_rejected(self):
        from datetime import time

        stations = [Station("A", "Alpha Station", "X")]
        svc = ScheduledService("G1", "A", "ZZZ", time(8, 0), time(9, 0), (SeatClass("s", 1, 1.0),))
        with pytest.raises(TimetableError, match="unknown station"):
            Timetable(stations, [svc])

    def test_overnight_service_rolls_to_next_day(self, timetable):
        [service] = timetable.services_between("BJW", "CDE", TRAVEL_DATE)[1:]
        assert service.train_no == "D953"
        assert service.arr_time.date() == TRAVEL_DATE.replace(day=11)
        assert service.arr_time > service.dep_time


class TestQueryTickets:
    def test_direct_pair_returns_top_three(self, timetable):
        query = TicketQuery("Chongqing North Station", "Chengdu East Station", TRAVEL_DATE, AFTERNOON)
        result = query_tickets(query, timetable)
        assert not result.is_error
        trains = [svc["train_no"] for svc in result.payload["services"]]
        assert trains == ["G8503", "G8505", "G8507"]
        assert "Top 3 trains" in result.text

    def test_top_three_equals_bruteforce_sort_oracle(self, timetable):
        query = TicketQuery("Chongqing North Station", "Chengdu East Station", TRAVEL_DATE, AFTERNOON)
        result = query_tickets(query, timetable)
        # Oracle: linear scan, filter by window, sort by (dep, train_no).
        day = timetable.services_between("CQN", "CDE", TRAVEL_DATE)
        start, end = AFTERNOON
        eligible = [
            s for s in day if start <= s.dep_time.hour * 60 + s.dep_time.minute < end
        ]
        assert len(eligible) == 7
        expected = [
            s.train_no for s in sorted(eligible, key=lambda s: (s.dep_time, s.train_no))[:3]
        ]
        assert [svc["train_no"] for svc in result.payload["services"]] == expected

    def test_window_correctness_oracle(self, timetable):
        for window_name in ("morning", "afternoon", "evening"):
            window = resolve_time_window(window_name)
            query = TicketQuery(
                "Chongqing North Station", "Chengdu East Station", TRAVEL_DATE, window
            )
            result = query_tickets(query, timetable)
            if result.is_error:
                continue
            for svc in result.payload["services"]:
                minutes = int(svc["dep_time"][11:13]) * 60 + int(svc["dep_time"][14:16])
                assert window[0] <= minutes < window[1]

    def test_city_pair_suggests_best_alternative_with_error_info(self, timetable):
        query = TicketQuery("Chongqing Station", "Chengdu Station", TRAVEL_DATE, AFTERNOON)
        result = query_tickets(query, timetable, error_info=True)
        assert result.is_error
        assert "no direct train service exists" in result.text
        assert result.payload["suggestion"]["from"] == "Chongqing North Station"
        assert result.payload["suggestion"]["to"] == "Chengdu East Station"

    def test_suggestion_soundness(self, timetable):
        queries = [
            TicketQuery("Chongqing Station", "Chengdu Station", TRAVEL_DATE),
            TicketQuery("Chongqing West Station", "Chengdu Station", TRAVEL_DATE),
            TicketQuery("Beijing Station", "Chengdu Station", TRAVEL_DATE),
        ]
        for query in queries:
            result = query_tickets(query, timetable, error_info=True)
            if result.is_error and "suggestion" in (result.payload or {}):
                suggestion = result.payload["suggestion"]
                dep = timetable.resolve_station(suggestion["from"]).station
                arr = timetable.resolve_station(suggestion["to"]).station
                services = timetable.services_between(
                    dep.station_id, arr.station_id, query.date
                )
                assert len(services) >= 1
                assert suggestion["services_that_day"] == len(services)

    def test_without_error_info_failure_is_bare(self, timetable):
        query = TicketQuery("Chongqing Station", "Chengdu Station", TRAVEL_DATE, AFTERNOON)
        result = query_tickets(query, timetable, error_info=False)
        assert result.is_error
        assert result.text == "no matching trains found"
        # the structured diagnosis is retained for evaluation either way
        assert result.payload["failure_slot"] == "station"

    def test_mode_monotonicity_on_failures(self, timetable):
        failing = [
            TicketQuery("Chongqing Station", "Chengdu Station", TRAVEL_DATE, AFTERNOON),
            TicketQuery("Atlantis Station", "Chengdu East Station", TRAVEL_DATE),
            TicketQuery(
                "Chongqing North Station", "Chengdu East Station", TRAVEL_DATE, (0, 60)
            ),
        ]
        for query in failing:
            verbose = query_tickets(query, timetable, error_info=True)
            bare = query_tickets(query, timetable, error_info=False)
            assert verbose.is_error and bare.is_error
            assert len(verbose.text) > len(bare.text)

    def test_unknown_station_named_in_error(self, timetable):
        query = TicketQuery("Atlantis Station", "Chengdu East Station", TRAVEL_DATE)
        result = query_tickets(query, timetable)
        assert result.is_error
        assert "Atlantis Station" in result.text
        assert result.payload["failure_slot"] == "station"

    def test_window_with_no_departures_is_time_failure(self, timetable):
        query = TicketQuery(
            "Chongqing North Station", "Chengdu East Station", TRAVEL_DATE, (0, 300)
        )
        result = query_tickets(query, timetable)
        assert result.is_error
        assert result.payload["failure_slot"] == "time"
        assert "earliest at 08:02" in result.text

    def test_no_alternative_at_all(self, timetable):
        query = TicketQuery("Shanghai Hongqiao Station", "Chengdu East Station", TRAVEL_DATE)
        result = query_tickets(query, timetable)
        assert result.is_error
        assert "no train service found" in result.text

    def test_success_shape_lists_seats_and_prices(self, timetable):
        query = TicketQuery("Beijing South Station", "Shanghai Hongqiao Station", TRAVEL_DATE)
        result = query_tickets(query, timetable)
        assert not result.is_error
        assert "¥553" in result.text
        for svc in result.payload["services"]:
            assert svc["seats"]


class TestLoadTimetable:
    def test_sample_counts(self, timetable):
        assert len(timetable.stations) == 7
        assert len(timetable.services) == 17

    def test_malformed_row_addressed(self, tmp_path):
        path = tmp_path / "tt.jsonl"
        path.write_text('{"kind": "station", "id": "A"}\n', encoding="utf-8")
        with pytest.raises(TimetableError, match="row 1"):
            load_timetable(path)

    def test_unknown_kind_rejected(self, tmp_path):
        path = tmp_path / "tt.jsonl"
        path.write_text('{"kind": "banana"}\n', encoding="utf-8")
        with pytest.raises(TimetableError, match="unknown record kind"):
            load_timetable(path)
