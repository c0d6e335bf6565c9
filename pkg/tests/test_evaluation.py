from __future__ import annotations

import math

import pytest

from railagent.config import data_path
from railagent.engine import (
    OUTCOME_ANSWERED,
    OUTCOME_BUDGET_EXHAUSTED,
    QtaoStep,
    QtaoTrace,
)
from railagent.evaluation import (
    FAILURE_CAUSES,
    UNCLASSIFIED,
    EvalReport,
    ScenarioOutcome,
    UserSimulator,
    aggregate,
    build_simulator_pack,
    classify_failure,
    classify_scenario_failure,
    load_scenario,
    load_scenarios,
    prop_at_k,
    recall_at_k,
    render_report,
    run_scenario,
    run_simulated_session,
    run_suite,
)
from railagent.grammar import FinalAnswer, ObservationResult, SlotMap, ToolCall


def _error_trace(payload: dict) -> QtaoTrace:
    steps = (
        QtaoStep(
            1,
            "try tool",
            ToolCall("Ticketing", SlotMap({"from": "A"})),
            ObservationResult.error("failed", payload),
        ),
    )
    return QtaoTrace(1, "q", steps, None, OUTCOME_BUDGET_EXHAUSTED)


class TestClassifyFailure:
    def test_date_failure(self):
        assert classify_failure(_error_trace({"failure_slot": "date"})) == "Date"

    def test_station_failure(self):
        assert classify_failure(_error_trace({"failure_slot": "station"})) == "Station"

    def test_city_and_time(self):
        assert classify_failure(_error_trace({"failure_slot": "place"})) == "City"
        assert classify_failure(_error_trace({"failure_slot": "time"})) == "Time"

    def test_missing_slots_fallback(self):
        assert classify_failure(_error_trace({"missing_slots": ["date"]})) == "Date"

    def test_first_cause_wins(self):
        steps = (
            QtaoStep(
                1,
                "t",
                ToolCall("Ticketing", SlotMap()),
                ObservationResult.error("x", {"failure_slot": "station"}),
            ),
            QtaoStep(
                2,
                "t",
                ToolCall("Ticketing", SlotMap()),
                ObservationResult.error("x", {"failure_slot": "date"}),
            ),
        )
        trace = QtaoTrace(1, "q", steps, None, OUTCOME_BUDGET_EXHAUSTED)
        assert classify_failure(trace) == "Station"

    def test_unclassifiable(self):
        trace = QtaoTrace(
            1,
            "q",
            (QtaoStep(1, "t", FinalAnswer("bye"), None),),
            "bye",
            OUTCOME_ANSWERED,
        )
        assert classify_failure(trace) is None
        assert classify_scenario_failure([trace]) == UNCLASSIFIED


class TestPropAtK:
    def test_all_in_corpus(self, corpus):
        lists = [["Kung Pao Chicken", "Egg Tarts"], ["Dan Dan Noodles"]]
        assert prop_at_k(lists, corpus, k=5) == 1.0

    def test_hand_arithmetic(self, corpus):
        lists = [
            ["Kung Pao Chicken", "Egg Tarts", "Dan Dan Noodles", "Fake A", "Fake B"],  # 3/5
            ["Kung Pao Chicken", "Egg Tarts", "Dan Dan Noodles", "Mapo Tofu Rice Bowl", "Spicy Duck Neck"],  # 5/5
        ]
        assert prop_at_k(lists, corpus, k=5) == pytest.approx(0.8)

    def test_short_lists_counted_over_actual_length(self, corpus):
        lists = [["Kung Pao Chicken", "Fake"]]  # 1/2 even at k=10
        assert prop_at_k(lists, corpus, k=10) == pytest.approx(0.5)

    def test_name_matching_is_normalized(self, corpus):
        assert prop_at_k([["  kung   pao CHICKEN "]], corpus, k=1) == 1.0


class TestRecallAtK:
    def test_rank_one_counts_at_every_k(self):
        sessions = [("gt", ["gt", "b", "c"])]
        for k in (1, 5, 10):
            assert recall_at_k(sessions, k) == 1.0

    def test_rank_seven_threshold(self):
        ranked = [f"i{n}" for n in range(1, 7)] + ["gt"] + ["i8", "i9", "i10"]
        sessions = [("gt", ranked)]
        assert recall_at_k(sessions, 5) == 0.0
        assert recall_at_k(sessions, 10) == 1.0

    def test_mixed_sessions(self):
        sessions = [("a", ["a"]), ("b", ["x", "b"]), ("c", ["x", "y"])]
        assert recall_at_k(sessions, 1) == pytest.approx(1 / 3)
        assert recall_at_k(sessions, 2) == pytest.approx(2 / 3)


def _outcome(i, group="weather", success=True, iters=1, cause=None) -> ScenarioOutcome:
    return ScenarioOutcome(
        scenario_id=f"s{i:03d}",
        group=group,
        success=success,
        qtao_iterations=iters,
        failure_cause=cause,
    )


class TestAggregate:
    def test_accuracy_ratio(self, corpus):
        outcomes = [
            _outcome(0),
            _outcome(1),
            _outcome(2),
            _outcome(3, success=False, cause="Date"),
        ]
        report = aggregate(outcomes, corpus)
        assert report.groups["weather"]["accuracy"] == 0.75

    def test_iteration_distribution_hand_case(self, corpus):
        outcomes = [
            _outcome(0, iters=1),
            _outcome(1, iters=1),
            _outcome(2, iters=2),
            _outcome(3, iters=3),
        ]
        stats = aggregate(outcomes, corpus).groups["weather"]
        assert stats["iteration_distribution_pct"] == {"1": 50.0, "2": 25.0, "3": 25.0, ">3": 0.0}
        assert stats["mean_qtao_successful"] == pytest.approx(1.75)

    def test_distributions_sum_to_100(self, corpus):
        outcomes = [
            _outcome(i, iters=(i % 4) + 1, success=i % 3 != 0, cause="Date" if i % 3 == 0 else None)
            for i in range(30)
        ]
        stats = aggregate(outcomes, corpus).groups["weather"]
        assert math.isclose(sum(stats["iteration_distribution_pct"].values()), 100.0)
        assert math.isclose(sum(stats["failure_cause_pct"].values()), 100.0)

    def test_unclassified_excluded_from_percentages(self, corpus):
        outcomes = [
            _outcome(0, success=False, cause="Date"),
            _outcome(1, success=False, cause=UNCLASSIFIED),
        ]
        stats = aggregate(outcomes, corpus).groups["weather"]
        assert stats["failure_cause_pct"]["Date"] == 100.0
        assert stats["unclassified_failures"] == 1

    def test_zero_shot_and_aligned_use_identical_preliminary_lists(self, corpus):
        outcome = ScenarioOutcome(
            scenario_id="r1",
            group="recommendation",
            success=True,
            qtao_iterations=1,
            preliminary_names=("Kung Pao Chicken", "Fake Dish"),
            aligned_ids=("CD001", "CQ003"),
            aligned_names=("Kung Pao Chicken", "Spicy Chicken Burger"),
            ground_truth_id="CD001",
            ground_truth_name="Kung Pao Chicken",
        )
        report = aggregate([outcome], corpus)
        # both pipelines present and computed over the same sessions
        assert set(report.recall_zero_shot) == set(report.recall_aligned) == {"1", "5", "10"}
        assert report.prop_pre_alignment["1"] == 1.0
        assert report.prop_post_alignment["10"] == 1.0


class TestShippedPack:
    def test_pack_loads_sorted(self):
        scenarios = load_scenarios(data_path("scenarios"))
        assert len(scenarios) == 14
        assert [s.scenario_id for s in scenarios] == sorted(s.scenario_id for s in scenarios)

    def test_reroute_scenario_succeeds_in_three_iterations(self):
        scenario = load_scenario(data_path("scenarios/t02_reroute.yaml"))
        outcome = run_scenario(scenario)
        assert outcome.success
        assert outcome.qtao_iterations == 3

    def test_suite_matches_committed_golden_report(self):
        from pathlib import Path

        report = run_suite(load_scenarios(data_path("scenarios")))
        golden_path = Path(__file__).parent / "golden" / "report.json"
        assert report.to_json() == golden_path.read_text(encoding="utf-8")

    def test_suite_is_deterministic_across_runs_and_workers(self):
        scenarios = load_scenarios(data_path("scenarios"))
        serial = run_suite(scenarios).to_json()
        parallel = run_suite(scenarios, workers=4).to_json()
        assert serial == parallel

    def test_report_renders_all_table_schemas(self):
        report = run_suite(load_scenarios(data_path("scenarios")))
        text = render_report(report)
        assert "Accuracy and iterations per task mode" in text
        assert "Acc / #QTAO" in text
        for bucket in ("1 round(s)", "2 round(s)", "3 round(s)", ">3 round(s)"):
            assert bucket in text
        for cause in FAILURE_CAUSES:
            assert cause in text
        for metric in ("Prop@1", "Prop@5", "Prop@10", "Recall@1", "Recall@5", "Recall@10"):
            assert metric in text
        assert "pre-alignment" in text and "post-alignment" in text
        assert "zero-shot" in text and "with alignment" in text


class TestUserSimulator:
    def test_deterministic_given_truth_and_seed(self, corpus):
        item = corpus.lookup_name("Chongqing Hotpot Set")
        a = UserSimulator(item, corpus.legend, seed=3).utterances()
        b = UserSimulator(item, corpus.legend, seed=3).utterances()
        assert a == b
        c = UserSimulator(item, corpus.legend, seed=4).utterances()
        assert a != c

    def test_never_leaks_item_name(self, corpus):
        from railagent.catalog import normalize_name

        for item in corpus.items:
            for line in UserSimulator(item, corpus.legend, seed=1).utterances():
                assert normalize_name(item.name) not in normalize_name(line)

    def test_turn_budget(self, corpus):
        sim = UserSimulator(corpus.items[0], corpus.legend, seed=0, max_turns=3)
        assert len(sim.utterances()) == 3
        assert sim.next_utterance(99) is None

    def test_accepts_ground_truth(self, corpus):
        sim = UserSimulator(corpus.items[0], corpus.legend, seed=0)
        assert sim.accepts([corpus.items[0].item_id, "other"])
        assert not sim.accepts(["other"])


class TestSimulatorPack:
    def test_recall_matches_hand_tally(self, corpus):
        pack = build_simulator_pack(corpus, n_sessions=25, seed=7, k=10)
        outcomes = [run_simulated_session(s, corpus, k=10) for s in pack]
        sessions = [(o.ground_truth_id, o.aligned_ids) for o in outcomes]
        for k, frozen in ((1, 7 / 25), (5, 13 / 25), (10, 20 / 25)):
            tally = 0
            for truth, ranked in sessions:
                if truth in list(ranked)[:k]:
                    tally += 1
            assert recall_at_k(sessions, k) == pytest.approx(tally / 25)
            assert recall_at_k(sessions, k) == pytest.approx(frozen)

    def test_pack_is_deterministic(self, corpus):
        first = build_simulator_pack(corpus, n_sessions=5, seed=7)
        second = build_simulator_pack(corpus, n_sessions=5, seed=7)
        assert [s.ground_truth.item_id for s in first] == [s.ground_truth.item_id for s in second]
        assert [s.script[0].completion for s in first] == [s.script[0].completion for s in second]

    def test_aligned_outputs_always_in_corpus(self, corpus):
        ids = {item.item_id for item in corpus.items}
        pack = build_simulator_pack(corpus, n_sessions=10, seed=3)
        for session in pack:
            outcome = run_simulated_session(session, corpus)
            assert set(outcome.aligned_ids) <= ids


class TestReportLayoutEdgeCases:
    def test_empty_metrics_render(self, corpus):
        report = aggregate([_outcome(0)], corpus)
        text = render_report(report)
        assert "Weather Inquiries" in text
        assert "Prop@" not in text  # no recommendation outcomes present

    def test_report_json_round_trip_stable(self, corpus):
        report = aggregate([_outcome(i) for i in range(3)], corpus)
        assert report.to_json() == report.to_json()
