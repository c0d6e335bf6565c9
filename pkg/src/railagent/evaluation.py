"""Batch evaluation: scenario packs, metrics, and table-shaped reports.

Scenarios are self-contained YAML files (fixed clock, scripted backend,
expected result); the suite runs each in isolation and aggregates
accuracy, iteration-count statistics, failure-cause distribution, the
in-catalog proportion of recommendations before and after alignment
(Prop@k), and Recall@k from simulator dialogues.  Reports are emitted
both as canonical JSON and as human-readable tables, in the same schemas
a live-model run would fill in.
"""

from __future__ import annotations

import json
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import yaml

from .backends import ScriptEntry, ScriptedBackend, load_script, script_entry_from_record
from .catalog import Corpus, DishItem, Legend, load_corpus, normalize_name
from .config import AppConfig
from .dates import fixed_clock
from .engine import QtaoTrace
from .grammar import FOOD_AND_DRINK, TICKETING, WEATHER
from .recommend import PassengerProfile, RecTurn, align, recommend_preliminary
from .runtime import AgentRuntime
from .sessions import InMemorySessionStore

FAILURE_CAUSES = ("Station", "City", "Date", "Time")
UNCLASSIFIED = "Unclassified"

_SLOT_TO_CAUSE = {
    "station": "Station",
    "from": "Station",
    "to": "Station",
    "city": "City",
    "place": "City",
    "date": "Date",
    "time": "Time",
}

GROUP_TICKETING_PLAIN = "ticketing_no_error_info"
GROUP_TICKETING_ERROR_INFO = "ticketing_error_info"
GROUP_WEATHER = "weather"
GROUP_RECOMMENDATION = "recommendation"

GROUP_LABELS = {
    GROUP_TICKETING_PLAIN: "Ticketing w/o Error Info",
    GROUP_TICKETING_ERROR_INFO: "Ticketing w/ Error Info",
    GROUP_WEATHER: "Weather Inquiries",
    GROUP_RECOMMENDATION: "F&D Recommendation",
}

ITERATION_BUCKETS = ("1", "2", "3", ">3")


class ScenarioLoadError(ValueError):
    pass


@dataclass(frozen=True)
class Scenario:
    scenario_id: str
    task: str  # "ticketing" | "weather" | "recommendation"
    turns: tuple[str, ...]
    expected: Mapping
    clock: datetime
    script: tuple[ScriptEntry, ...]
    error_info: bool = True
    profile: PassengerProfile = field(default_factory=lambda: PassengerProfile("eval"))
    k: int = 10
    overrides: Mapping = field(default_factory=dict)

    @property
    def group(self) -> str:
        if self.task == "ticketing":
            return GROUP_TICKETING_ERROR_INFO if self.error_info else GROUP_TICKETING_PLAIN
        if self.task == "weather":
            return GROUP_WEATHER
        return GROUP_RECOMMENDATION


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    if not isinstance(raw, dict):
        raise ScenarioLoadError(f"{path}: scenario file must hold a mapping")
    try:
        script_raw = raw["script"]
        if isinstance(script_raw, str):
            script = tuple(load_script(path.parent / script_raw))
        else:
            script = tuple(
                script_entry_from_record(r, index=i) for i, r in enumerate(script_raw)
            )
        profile_raw = raw.get("profile") or {"passenger_id": f"eval-{raw['scenario_id']}"}
        scenario = Scenario(
            scenario_id=str(raw["scenario_id"]),
            task=str(raw["task"]),
            turns=tuple(str(t) for t in raw["turns"]),
            expected=dict(raw["expected"]),
            clock=datetime.fromisoformat(str(raw["clock"])),
            script=script,
            error_info=bool(raw.get("error_info", True)),
            profile=PassengerProfile(**profile_raw),
            k=int(raw.get("k", 10)),
            overrides=dict(raw.get("overrides") or {}),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioLoadError(f"{path}: {exc}") from exc
    if scenario.task not in ("ticketing", "weather", "recommendation"):
        raise ScenarioLoadError(f"{path}: unknown task {scenario.task!r}")
    return scenario


def load_scenarios(directory: str | Path) -> list[Scenario]:
    directory = Path(directory)
    paths = sorted(directory.glob("*.yaml")) + sorted(directory.glob("*.yml"))
    if not paths:
        raise ScenarioLoadError(f"no scenario files under {directory}")
    scenarios = [load_scenario(p) for p in paths]
    return sorted(scenarios, key=lambda s: s.scenario_id)


@dataclass(frozen=True)
class ScenarioOutcome:
    scenario_id: str
    group: str
    success: bool
    qtao_iterations: int
    failure_cause: str | None = None  # one of FAILURE_CAUSES, UNCLASSIFIED, or None
    preliminary_names: tuple[str, ...] | None = None
    aligned_ids: tuple[str, ...] | None = None
    aligned_names: tuple[str, ...] | None = None
    ground_truth_id: str | None = None
    ground_truth_name: str | None = None

    def to_record(self) -> dict:
        return {
            "scenario_id": self.scenario_id,
            "group": self.group,
            "success": self.success,
            "qtao_iterations": self.qtao_iterations,
            "failure_cause": self.failure_cause,
            "preliminary_names": list(self.preliminary_names or []) or None,
            "aligned_ids": list(self.aligned_ids or []) or None,
            "ground_truth_id": self.ground_truth_id,
        }


def classify_failure(trace: QtaoTrace) -> str | None:
    """Map the first classifiable error observation to its failure cause."""
    for step in trace.steps:
        obs = step.observation
        if obs is None or not obs.is_error:
            continue
        payload = obs.payload or {}
        slot = payload.get("failure_slot")
        if slot in _SLOT_TO_CAUSE:
            return _SLOT_TO_CAUSE[slot]
        for missing in payload.get("missing_slots", []):
            if missing in _SLOT_TO_CAUSE:
                return _SLOT_TO_CAUSE[missing]
    return None


def classify_scenario_failure(traces: Sequence[QtaoTrace]) -> str:
    for trace in traces:
        cause = classify_failure(trace)
        if cause is not None:
            return cause
    return UNCLASSIFIED


def _last_tool_payload(traces: Sequence[QtaoTrace], tool_name: str) -> Mapping | None:
    payload = None
    for trace in traces:
        for step in trace.steps:
            obs = step.observation
            if obs is None or obs.is_error or obs.payload is None:
                continue
            action = step.action
            if getattr(action, "tool_name", None) == tool_name:
                payload = obs.payload
    return payload


def judge_scenario(scenario: Scenario, traces: Sequence[QtaoTrace]) -> ScenarioOutcome:
    """Apply the task's success predicate to a finished scenario run."""
    iterations = sum(len(t.steps) for t in traces)
    success = False
    preliminary = aligned_ids = aligned_names = None
    gt_id = gt_name = None

    if scenario.task == "ticketing":
        payload = _last_tool_payload(traces, TICKETING)
        if payload is not None:
            got = {svc["train_no"] for svc in payload.get("services", [])}
            success = got == set(scenario.expected.get("train_nos", []))
    elif scenario.task == "weather":
        payload = _last_tool_payload(traces, WEATHER)
        if payload is not None:
            forecast = payload.get("forecast", {})
            expected_city = str(scenario.expected.get("city", "")).casefold()
            expected_date = str(scenario.expected.get("date", ""))
            success = (
                forecast.get("city", "").casefold() == expected_city
                and forecast.get("date") == expected_date
            )
    else:
        gt_id = scenario.expected.get("item_id")
        gt_name = scenario.expected.get("item_name")
        payload = _last_tool_payload(traces, FOOD_AND_DRINK)
        if payload is not None:
            preliminary = tuple(payload.get("preliminary", []))
            recs = payload.get("recommendations", [])
            aligned_ids = tuple(r["item_id"] for r in recs)
            aligned_names = tuple(r["name"] for r in recs)
            success = gt_id in aligned_ids[: scenario.k]

    cause = None
    if not success:
        cause = classify_scenario_failure(traces)
    return ScenarioOutcome(
        scenario_id=scenario.scenario_id,
        group=scenario.group,
        success=success,
        qtao_iterations=iterations,
        failure_cause=cause,
        preliminary_names=preliminary,
        aligned_ids=aligned_ids,
        aligned_names=aligned_names,
        ground_truth_id=gt_id,
        ground_truth_name=gt_name,
    )


def run_scenario(scenario: Scenario, config: AppConfig | None = None) -> ScenarioOutcome:
    """Execute one scenario in isolation: fresh session, fixed clock,
    scripted backend; a crash counts as a failed scenario."""
    config = config or AppConfig()
    clock = fixed_clock(scenario.clock)
    backend = ScriptedBackend(list(scenario.script))
    runtime = AgentRuntime.build(config, backend=backend, clock=clock)
    store = InMemorySessionStore(clock)
    overrides = {
        "error_info_enabled": scenario.error_info,
        "recommendation_k": scenario.k,
        **scenario.overrides,
    }
    session = store.create(scenario.profile, overrides)
    try:
        for turn in scenario.turns:
            runtime.run_message(session, turn)
    except Exception:
        return ScenarioOutcome(
            scenario_id=scenario.scenario_id,
            group=scenario.group,
            success=False,
            qtao_iterations=sum(len(t.steps) for t in session.history),
            failure_cause=UNCLASSIFIED,
        )
    return judge_scenario(scenario, session.history)


def prop_at_k(name_lists: Sequence[Sequence[str]], corpus: Corpus, k: int) -> float:
    """Average fraction of the top-k names present in the catalog.

    Lists shorter than k are counted over their actual length; empty
    lists contribute zero.
    """
    if not name_lists:
        return 0.0
    total = 0.0
    for names in name_lists:
        top = list(names)[:k]
        if not top:
            continue
        hits = sum(1 for name in top if normalize_name(name) in corpus.index)
        total += hits / len(top)
    return total / len(name_lists)


def recall_at_k(sessions: Sequence[tuple[str, Sequence[str]]], k: int) -> float:
    """Fraction of (ground-truth id, ranked ids) sessions hit in the top k."""
    if not sessions:
        return 0.0
    hits = sum(1 for truth, ranked in sessions if truth in list(ranked)[:k])
    return hits / len(sessions)


@dataclass
class EvalReport:
    model: str
    groups: dict  # group key -> stats mapping
    prop_pre_alignment: dict  # k -> value
    prop_post_alignment: dict
    recall_zero_shot: dict
    recall_aligned: dict
    per_scenario: list

    def to_record(self) -> dict:
        return {
            "model": self.model,
            "groups": self.groups,
            "prop_at_k": {
                "pre_alignment": self.prop_pre_alignment,
                "post_alignment": self.prop_post_alignment,
            },
            "recall_at_k": {
                "zero_shot": self.recall_zero_shot,
                "aligned": self.recall_aligned,
            },
            "per_scenario": self.per_scenario,
        }

    def to_json(self) -> str:
        """Canonical serialization: byte-stable for identical inputs."""
        return json.dumps(self.to_record(), ensure_ascii=False, sort_keys=True, indent=2) + "\n"


def _group_stats(outcomes: Sequence[ScenarioOutcome]) -> dict:
    total = len(outcomes)
    successes = [o for o in outcomes if o.success]
    failures = [o for o in outcomes if not o.success]
    distribution: dict[str, float] = {}
    if successes:
        counts = {bucket: 0 for bucket in ITERATION_BUCKETS}
        for outcome in successes:
            if outcome.qtao_iterations <= 3:
                counts[str(outcome.qtao_iterations)] += 1
            else:
                counts[">3"] += 1
        distribution = {b: 100.0 * c / len(successes) for b, c in counts.items()}
    classified = [o for o in failures if o.failure_cause in FAILURE_CAUSES]
    causes: dict[str, float] = {}
    if classified:
        cause_counts = {cause: 0 for cause in FAILURE_CAUSES}
        for outcome in classified:
            cause_counts[outcome.failure_cause] += 1
        causes = {c: 100.0 * n / len(classified) for c, n in cause_counts.items()}
    mean_all = sum(o.qtao_iterations for o in outcomes) / total if total else 0.0
    return {
        "total": total,
        "successes": len(successes),
        "accuracy": len(successes) / total if total else 0.0,
        "mean_qtao_successful": (
            sum(o.qtao_iterations for o in successes) / len(successes) if successes else None
        ),
        "mean_qtao_all": mean_all,
        "iteration_distribution_pct": distribution,
        "failure_cause_pct": causes,
        "unclassified_failures": sum(
            1 for o in failures if o.failure_cause not in FAILURE_CAUSES
        ),
    }


def aggregate(
    outcomes: Sequence[ScenarioOutcome],
    corpus: Corpus,
    ks: Sequence[int] = (1, 5, 10),
    model: str = "scripted",
) -> EvalReport:
    """Deterministic fold over outcomes ordered by scenario id."""
    outcomes = sorted(outcomes, key=lambda o: o.scenario_id)
    groups = {}
    for group in (
        GROUP_TICKETING_PLAIN,
        GROUP_TICKETING_ERROR_INFO,
        GROUP_WEATHER,
        GROUP_RECOMMENDATION,
    ):
        members = [o for o in outcomes if o.group == group]
        if members:
            groups[group] = _group_stats(members)

    rec_outcomes = [o for o in outcomes if o.preliminary_names is not None]
    pre_lists = [o.preliminary_names for o in rec_outcomes]
    post_lists = [o.aligned_names for o in rec_outcomes if o.aligned_names is not None]
    with_truth = [
        o for o in rec_outcomes if o.ground_truth_id is not None and o.aligned_ids is not None
    ]
    prop_pre = {str(k): prop_at_k(pre_lists, corpus, k) for k in ks} if pre_lists else {}
    prop_post = {str(k): prop_at_k(post_lists, corpus, k) for k in ks} if post_lists else {}
    recall_aligned = (
        {str(k): recall_at_k([(o.ground_truth_id, o.aligned_ids) for o in with_truth], k) for k in ks}
        if with_truth
        else {}
    )
    zero_shot_sessions = [
        (
            normalize_name(o.ground_truth_name or ""),
            [normalize_name(n) for n in o.preliminary_names],
        )
        for o in with_truth
        if o.ground_truth_name
    ]
    recall_zero = (
        {str(k): recall_at_k(zero_shot_sessions, k) for k in ks} if zero_shot_sessions else {}
    )
    return EvalReport(
        model=model,
        groups=groups,
        prop_pre_alignment=prop_pre,
        prop_post_alignment=prop_post,
        recall_zero_shot=recall_zero,
        recall_aligned=recall_aligned,
        per_scenario=[o.to_record() for o in outcomes],
    )


def run_suite(
    scenarios: Iterable[Scenario],
    config: AppConfig | None = None,
    ks: Sequence[int] = (1, 5, 10),
    model: str = "scripted",
    workers: int = 1,
) -> EvalReport:
    """Run every scenario in isolation and aggregate the metric suite."""
    scenarios = sorted(scenarios, key=lambda s: s.scenario_id)
    corpus_config = config or AppConfig()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(lambda s: run_scenario(s, config), scenarios))
    else:
        outcomes = [run_scenario(s, config) for s in scenarios]
    corpus = load_corpus(corpus_config.data.resolved_corpus())
    return aggregate(outcomes, corpus, ks=ks, model=model)


def _fmt(value, width: int = 8) -> str:
    if value is None:
        return "-".rjust(width)
    if isinstance(value, float):
        return f"{value:.4f}".rjust(width)
    return str(value).rjust(width)


def render_report(report: EvalReport) -> str:
    """Human-readable tables mirroring the published metric layouts."""
    lines: list[str] = []
    group_keys = [g for g in GROUP_LABELS if g in report.groups]

    lines.append("== Accuracy and iterations per task mode ==")
    header = f"{'model':<12}" + "".join(
        f" | {GROUP_LABELS[g]:>26} (Acc / #QTAO)" for g in group_keys
    )
    lines.append(header)
    row = f"{report.model:<12}"
    for g in group_keys:
        stats = report.groups[g]
        mean = stats["mean_qtao_successful"]
        mean_text = f"{mean:.2f}" if mean is not None else "-"
        row += f" | {stats['accuracy']:>33.4f} / {mean_text}"
    lines.append(row)

    lines.append("")
    lines.append("== Iteration count distribution over successful scenarios (%) ==")
    lines.append(f"{'#QTAO':<11}" + "".join(f" | {GROUP_LABELS[g]:>26}" for g in group_keys))
    for bucket in ITERATION_BUCKETS:
        row = f"{bucket + ' round(s)':<11}"
        for g in group_keys:
            pct = report.groups[g]["iteration_distribution_pct"].get(bucket)
            row += f" | {_fmt(pct, 26)}"
        lines.append(row)

    lines.append("")
    lines.append("== Failure cause distribution over classified failures (%) ==")
    lines.append(f"{'Cause':<11}" + "".join(f" | {GROUP_LABELS[g]:>26}" for g in group_keys))
    for cause in FAILURE_CAUSES:
        row = f"{cause:<11}"
        for g in group_keys:
            pct = report.groups[g]["failure_cause_pct"].get(cause)
            row += f" | {_fmt(pct, 26)}"
        lines.append(row)
    unclassified = {g: report.groups[g]["unclassified_failures"] for g in group_keys}
    if any(unclassified.values()):
        lines.append(f"(unclassified failures, reported separately: {unclassified})")

    if report.prop_pre_alignment or report.prop_post_alignment:
        lines.append("")
        lines.append("== Proportion of recommendations present in the catalog (Prop@k) ==")
        lines.append(f"{'Metric':<10} | {'pre-alignment':>14} | {'post-alignment':>14}")
        for k in sorted(report.prop_pre_alignment or report.prop_post_alignment, key=int):
            pre = report.prop_pre_alignment.get(k)
            post = report.prop_post_alignment.get(k)
            lines.append(f"{'Prop@' + k:<10} | {_fmt(pre, 14)} | {_fmt(post, 14)}")

    if report.recall_zero_shot or report.recall_aligned:
        lines.append("")
        lines.append("== Recommendation recall (Recall@k) ==")
        lines.append(f"{'Metric':<10} | {'zero-shot':>14} | {'with alignment':>14}")
        for k in sorted(report.recall_zero_shot or report.recall_aligned, key=int):
            zero = report.recall_zero_shot.get(k)
            aligned = report.recall_aligned.get(k)
            lines.append(f"{'Recall@' + k:<10} | {_fmt(zero, 14)} | {_fmt(aligned, 14)}")

    lines.append("")
    return "\n".join(lines)


# --- user simulator -------------------------------------------------------

_SPICE_PHRASES = {
    "not_spicy": "nothing spicy at all, please",
    "mild": "just mildly spicy is fine",
    "medium": "I can handle medium spice",
    "very_spicy": "the spicier the better",
    "extra_spicy": "I love extremely spicy food",
}


@dataclass
class UserSimulator:
    """Rule-based passenger persona for recommendation evaluation.

    Emits preference statements derived from the hidden ground-truth
    item's features, never the item name itself.  Deterministic given
    (ground truth, seed).
    """

    ground_truth: DishItem
    legend: Legend
    seed: int = 0
    max_turns: int = 5

    def _aspects(self) -> list[str]:
        item = self.ground_truth
        aspects = [
            f"I'd prefer {self.legend.type_of_food[item.type_of_food]} food.",
            f"{self.legend.cuisine[item.cuisine]} style sounds good to me.",
            f"I'm traveling through {item.city}, something local would be nice.",
            _SPICE_PHRASES[item.spiciness[0]].capitalize() + ".",
            f"It's mainly for {item.meals[0]}.",
            f"Ideally under ¥{int(item.price * 1.5) + 5}.",
        ]
        if item.child_friendly:
            aspects.append("It should suit a child as well.")
        rng = random.Random(f"{self.seed}:{item.item_id}")
        rng.shuffle(aspects)
        return aspects

    def utterances(self) -> list[str]:
        opener = "Hi! Could you recommend something to eat on my trip?"
        lines = [opener] + self._aspects()
        out = lines[: self.max_turns]
        truth = normalize_name(self.ground_truth.name)
        for line in out:
            assert truth not in normalize_name(line), "simulator must not leak the item name"
        return out

    def next_utterance(self, turn_index: int) -> str | None:
        lines = self.utterances()
        return lines[turn_index] if turn_index < len(lines) else None

    def accepts(self, recommended_ids: Sequence[str]) -> bool:
        return self.ground_truth.item_id in recommended_ids


@dataclass(frozen=True)
class SimulatedSession:
    session_id: str
    ground_truth: DishItem
    utterances: tuple[str, ...]
    script: tuple[ScriptEntry, ...]
    planned_rank: int | None  # rank of the truth in the scripted list; None = absent


_FAKE_ITEMS = (
    ("Angus Beef Burger", "type=Western; cuisine=Western Fast Food; meals=lunch,dinner; child_friendly=yes; spiciness=not_spicy; price=35"),
    ("Truffle Mushroom Pasta", "type=Western; cuisine=Western Fast Food; meals=dinner; child_friendly=no; spiciness=not_spicy; price=68"),
    ("Dragon Well Shrimp", "type=Chinese; cuisine=Cantonese; meals=dinner; child_friendly=yes; spiciness=not_spicy; price=88"),
    ("Volcano Chicken Wings", "type=Western; cuisine=Western Fast Food; meals=snack; child_friendly=no; spiciness=extra_spicy; price=29"),
    ("Jasmine Milk Tea", "type=Chinese; cuisine=Dessert & Drinks; meals=snack; child_friendly=yes; spiciness=not_spicy; price=14"),
    ("Imperial Duck Feast", "type=Chinese; cuisine=Shandong; meals=dinner; child_friendly=no; spiciness=not_spicy; price=128"),
    ("Golden Custard Buns", "type=Chinese; cuisine=Cantonese; meals=breakfast,snack; child_friendly=yes; spiciness=not_spicy; price=18"),
    ("Firehouse Noodle Bowl", "type=Chinese; cuisine=Sichuan; meals=lunch; child_friendly=no; spiciness=very_spicy,extra_spicy; price=23"),
)


def build_simulator_pack(
    corpus: Corpus, n_sessions: int = 25, seed: int = 7, k: int = 10
) -> list[SimulatedSession]:
    """Construct deterministic simulator sessions with scripted proposals.

    Each session hides one catalog item as ground truth, scripts the
    model's proposal list so the truth lands at a planned rank (or is
    absent), and pads the list with a mix of catalog names and invented
    off-catalog names carrying feature claims.
    """
    items = corpus.items_sorted()
    sessions: list[SimulatedSession] = []
    for i in range(n_sessions):
        rng = random.Random(f"pack:{seed}:{i}")
        truth = rng.choice(items)
        session_id = f"sim-{i:02d}"
        simulator = UserSimulator(truth, corpus.legend, seed=seed * 1000 + i, max_turns=4)
        utterances = tuple(simulator.utterances())

        roll = rng.random()
        if roll < 0.55:
            planned_rank = 1 if roll < 0.30 else rng.randint(2, min(5, k))
        elif roll < 0.80:
            planned_rank = rng.randint(min(6, k), k)
        else:
            planned_rank = None

        decoy_pool = [item for item in items if item.item_id != truth.item_id]
        rng.shuffle(decoy_pool)
        fake_pool = list(_FAKE_ITEMS)
        rng.shuffle(fake_pool)
        lines: list[str] = []
        rank = 1
        decoys = iter(decoy_pool)
        fakes = iter(fake_pool)
        while len(lines) < k:
            if planned_rank is not None and rank == planned_rank:
                lines.append(f"{rank}. {truth.name}")
            elif rng.random() < 0.35:
                name, features = next(fakes)
                lines.append(f"{rank}. {name} ({features})")
            else:
                lines.append(f"{rank}. {next(decoys).name}")
            rank += 1
        completion = "\n".join(lines)
        script = (ScriptEntry(completion=completion, substring=f"id={session_id}"),)
        sessions.append(
            SimulatedSession(
                session_id=session_id,
                ground_truth=truth,
                utterances=utterances,
                script=script,
                planned_rank=planned_rank,
            )
        )
    return sessions


def run_simulated_session(
    session: SimulatedSession, corpus: Corpus, k: int = 10
) -> ScenarioOutcome:
    """Drive the recommender over one simulator dialogue."""
    backend = ScriptedBackend(list(session.script))
    profile = PassengerProfile(passenger_id=session.session_id)
    history = [RecTurn("passenger", u) for u in session.utterances]
    preliminary = recommend_preliminary(backend, profile, history, k, corpus.legend)
    aligned = align(preliminary, corpus, k)
    aligned_ids = tuple(rec.matched.item_id for rec in aligned)
    return ScenarioOutcome(
        scenario_id=session.session_id,
        group=GROUP_RECOMMENDATION,
        success=session.ground_truth.item_id in aligned_ids,
        qtao_iterations=1,
        preliminary_names=tuple(p.name for p in preliminary),
        aligned_ids=aligned_ids,
        aligned_names=tuple(rec.matched.name for rec in aligned),
        ground_truth_id=session.ground_truth.item_id,
        ground_truth_name=session.ground_truth.name,
    )
