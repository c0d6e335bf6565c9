"""Show catalog alignment mapping free-form proposals onto real dishes.

A model may propose items no restaurant sells. The aligner maps each
proposal onto the catalog: exact name match first, then feature-similarity
argmax when the proposal carries a feature tuple, then a lexical name
fallback. Every output is orderable.

Run:  python3 demos/03_recommendation_alignment.py
"""

from railagent.catalog import load_corpus
from railagent.config import data_path
from railagent.recommend import PartialFeatures, PreliminaryItem, align

corpus = load_corpus(data_path("corpus_sample.jsonl"))

proposals = [
    # sold as-is: exact name match
    PreliminaryItem("Kung Pao Chicken"),
    # invented western burger with a feature claim: similarity argmax
    PreliminaryItem(
        "Angus Beef Burger",
        PartialFeatures(
            type_of_food=2,
            cuisine=4,
            meals=("lunch", "dinner"),
            child_friendly=True,
            spiciness=("mild", "medium"),
            price=24.0,
        ),
    ),
    # invented name without features: lexical fallback
    PreliminaryItem("Chongqing Noodles Deluxe"),
]

for rec in align(proposals, corpus, k=10):
    print(
        f"{rec.source.name!r:<28} -> {rec.matched.name!r:<28} "
        f"(basis={rec.match_basis}, score={rec.similarity_score:.4f})"
    )
