"""Load the dish catalog and inspect the multi-hot feature encoding.

Each dish becomes a fixed-length binary vector: one-hot blocks for the
food type, cuisine, and price bin, multi-hot blocks for meal suitability
and spiciness, and a child-friendly bit.

Run:  python3 demos/02_catalog_features.py
"""

from railagent.catalog import corpus_stats, encode_features, load_corpus
from railagent.config import data_path

corpus = load_corpus(data_path("corpus_sample.jsonl"))
print(f"{len(corpus)} dishes, vector dimension {corpus.legend.dimension}")
print("price bin edges:", [round(e, 2) for e in corpus.legend.price_edges])
print("stats:", corpus_stats(corpus))
print()

for name in ("Chongqing Noodles", "Spicy Chicken Burger", "Mango Pomelo Sago"):
    dish = corpus.lookup_name(name)
    vector = encode_features(dish, corpus.legend)
    print(f"{dish.name}  (¥{dish.price:g}, {dish.city})")
    for block, view in sorted(corpus.legend.block_slices().items(), key=lambda kv: kv[1].start):
        bits = "".join(str(int(v)) for v in vector.values[view])
        print(f"  {block:<8} {bits}")
    print()
