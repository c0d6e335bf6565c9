"""Run the shipped scenario pack and the simulator recall pack.

Equivalent CLI:  railagent eval run --scenarios <dir> --backend scripted

Run:  python3 demos/06_evaluation_suite.py
"""

from railagent.catalog import load_corpus
from railagent.config import data_path
from railagent.evaluation import (
    aggregate,
    build_simulator_pack,
    load_scenarios,
    recall_at_k,
    render_report,
    run_simulated_session,
    run_suite,
)

report = run_suite(load_scenarios(data_path("scenarios")))
print(render_report(report))

corpus = load_corpus(data_path("corpus_sample.jsonl"))
pack = build_simulator_pack(corpus, n_sessions=25, seed=7, k=10)
outcomes = [run_simulated_session(s, corpus, k=10) for s in pack]
sessions = [(o.ground_truth_id, o.aligned_ids) for o in outcomes]
print("simulator pack (25 dialogues, hidden ground-truth dishes):")
for k in (1, 5, 10):
    print(f"  Recall@{k} = {recall_at_k(sessions, k):.2f}")

sim_report = aggregate(outcomes, corpus)
print("\naggregated over the simulator pack:")
print(f"  zero-shot recall:  {sim_report.recall_zero_shot}")
print(f"  aligned recall:    {sim_report.recall_aligned}")
