"""Dish catalog: schema, validation, ingestion, and feature encoding.

A catalog file is line-delimited JSON with a leading legend record that
declares the categorical code tables, followed by one dish record per
line.  Categorical features (type of food, cuisine) are integer-coded;
meal suitability and spiciness are multi-hot flag sets; price is bucketed
into per-catalog quantile bins at load time.  Encoding every dish against
the legend yields fixed-dimension binary vectors, which is what the
recommendation aligner compares.
"""

from __future__ import annotations

import json
import re
from bisect import bisect_right
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

MEAL_FLAGS: tuple[str, ...] = ("breakfast", "lunch", "dinner", "snack")
SPICE_FLAGS: tuple[str, ...] = ("not_spicy", "mild", "medium", "very_spicy", "extra_spicy")
NOT_SPICY = "not_spicy"

FORMAT_VERSION = 1


class CorpusError(ValueError):
    """Base for catalog ingestion failures; carries the offending row."""

    def __init__(self, message: str, row: int | None = None):
        prefix = f"row {row}: " if row is not None else ""
        super().__init__(prefix + message)
        self.row = row


class FormatError(CorpusError):
    pass


class LegendError(CorpusError):
    pass


class InvariantError(CorpusError):
    pass


_NON_WORD = re.compile(r"[^0-9a-z一-鿿]+")


def normalize_name(name: str) -> str:
    """Case-fold and strip punctuation so lookups survive cosmetic variation."""
    return _NON_WORD.sub(" ", name.casefold()).strip()


@dataclass(frozen=True)
class Legend:
    """Code tables and encoding parameters shared by a whole catalog."""

    type_of_food: Mapping[int, str]
    cuisine: Mapping[int, str]
    price_bin_count: int = 5
    price_edges: tuple[float, ...] = ()
    format_version: int = FORMAT_VERSION

    def __post_init__(self) -> None:
        if not self.type_of_food or not self.cuisine:
            raise LegendError("legend must declare type_of_food and cuisine codes")
        if self.price_bin_count < 1:
            raise LegendError("price_bin_count must be >= 1")

    @property
    def type_codes(self) -> tuple[int, ...]:
        return tuple(sorted(self.type_of_food))

    @property
    def cuisine_codes(self) -> tuple[int, ...]:
        return tuple(sorted(self.cuisine))

    def block_widths(self) -> dict[str, int]:
        return {
            "type": len(self.type_of_food),
            "cuisine": len(self.cuisine),
            "meal": len(MEAL_FLAGS),
            "child": 1,
            "spice": len(SPICE_FLAGS),
            "price": self.price_bin_count,
        }

    def block_slices(self) -> dict[str, slice]:
        slices: dict[str, slice] = {}
        offset = 0
        for name, width in self.block_widths().items():
            slices[name] = slice(offset, offset + width)
            offset += width
        return slices

    @property
    def dimension(self) -> int:
        return sum(self.block_widths().values())

    def price_bin(self, price: float) -> int:
        return min(bisect_right(self.price_edges, price), self.price_bin_count - 1)

    def cuisine_code_for(self, label: str) -> int | None:
        wanted = label.strip().casefold()
        for code, name in self.cuisine.items():
            if name.casefold() == wanted:
                return code
        return None

    def type_code_for(self, label: str) -> int | None:
        wanted = label.strip().casefold()
        for code, name in self.type_of_food.items():
            if name.casefold() == wanted:
                return code
        return None

    def to_record(self) -> dict:
        return {
            "format_version": self.format_version,
            "type_of_food": {str(k): v for k, v in sorted(self.type_of_food.items())},
            "cuisine": {str(k): v for k, v in sorted(self.cuisine.items())},
            "price_bins": self.price_bin_count,
        }

    @classmethod
    def from_record(cls, record: Mapping, row: int | None = None) -> "Legend":
        try:
            type_of_food = {int(k): str(v) for k, v in record["type_of_food"].items()}
            cuisine = {int(k): str(v) for k, v in record["cuisine"].items()}
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            raise LegendError(f"malformed legend record: {exc}", row) from None
        version = int(record.get("format_version", FORMAT_VERSION))
        if version > FORMAT_VERSION:
            raise LegendError(f"unsupported catalog format version {version}", row)
        return cls(
            type_of_food=type_of_food,
            cuisine=cuisine,
            price_bin_count=int(record.get("price_bins", 5)),
            format_version=version,
        )


@dataclass(frozen=True)
class DishItem:
    item_id: str
    name: str
    city: str
    restaurant: str
    price: float
    type_of_food: int
    cuisine: int
    meals: tuple[str, ...]
    child_friendly: bool
    spiciness: tuple[str, ...]
    image_ref: str | None = None

    def validate(self, legend: Legend, row: int | None = None) -> None:
        for label, value in (("item_id", self.item_id), ("name", self.name), ("city", self.city)):
            if not value or not str(value).strip():
                raise InvariantError(f"{label} must be non-empty", row)
        if self.price < 0:
            raise InvariantError(f"price must be >= 0, got {self.price}", row)
        if self.type_of_food not in legend.type_of_food:
            raise LegendError(f"unknown type_of_food code {self.type_of_food}", row)
        if self.cuisine not in legend.cuisine:
            raise LegendError(f"unknown cuisine code {self.cuisine}", row)
        if not self.meals:
            raise InvariantError("at least one meal suitability flag required", row)
        for meal in self.meals:
            if meal not in MEAL_FLAGS:
                raise LegendError(f"unknown meal flag {meal!r}", row)
        if not self.spiciness:
            raise InvariantError("at least one spiciness flag required", row)
        for flag in self.spiciness:
            if flag not in SPICE_FLAGS:
                raise LegendError(f"unknown spiciness flag {flag!r}", row)
        if NOT_SPICY in self.spiciness and len(self.spiciness) > 1:
            raise InvariantError(
                f"spiciness exclusivity violated for {self.name!r}: "
                f"'not_spicy' cannot combine with {sorted(set(self.spiciness) - {NOT_SPICY})}",
                row,
            )

    def to_record(self) -> dict:
        record = {
            "item_id": self.item_id,
            "name": self.name,
            "city": self.city,
            "restaurant": self.restaurant,
            "price": self.price,
            "type_of_food": self.type_of_food,
            "cuisine": self.cuisine,
            "meals": list(self.meals),
            "child_friendly": self.child_friendly,
            "spiciness": list(self.spiciness),
        }
        if self.image_ref is not None:
            record["image"] = self.image_ref
        return record

    @classmethod
    def from_record(cls, record: Mapping, row: int | None = None) -> "DishItem":
        try:
            return cls(
                item_id=str(record["item_id"]),
                name=str(record["name"]),
                city=str(record["city"]),
                restaurant=str(record.get("restaurant", "")),
                price=float(record["price"]),
                type_of_food=int(record["type_of_food"]),
                cuisine=int(record["cuisine"]),
                meals=tuple(record["meals"]),
                child_friendly=bool(record["child_friendly"]),
                spiciness=tuple(record["spiciness"]),
                image_ref=record.get("image"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"malformed dish record: {exc}", row) from None


@dataclass(frozen=True)
class FeatureVector:
    """Binary encoding of one dish against a legend.

    Layout, in order: type one-hot | cuisine one-hot | meal multi-hot
    (breakfast, lunch, dinner, snack) | child-friendly bit | spiciness
    multi-hot (not_spicy, mild, medium, very_spicy, extra_spicy) | price
    bin one-hot.
    """

    values: np.ndarray
    legend: Legend = field(compare=False)

    def block(self, name: str) -> np.ndarray:
        return self.values[self.legend.block_slices()[name]]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FeatureVector):
            return NotImplemented
        return np.array_equal(self.values, other.values)

    def __hash__(self) -> int:
        return hash(self.values.tobytes())


def encode_features(item: DishItem, legend: Legend) -> FeatureVector:
    """Encode a validated dish into the legend's fixed binary layout."""
    values = np.zeros(legend.dimension, dtype=np.float64)
    slices = legend.block_slices()

    type_codes = legend.type_codes
    if item.type_of_food not in type_codes:
        raise LegendError(f"unknown type_of_food code {item.type_of_food}")
    values[slices["type"].start + type_codes.index(item.type_of_food)] = 1.0

    cuisine_codes = legend.cuisine_codes
    if item.cuisine not in cuisine_codes:
        raise LegendError(f"unknown cuisine code {item.cuisine}")
    values[slices["cuisine"].start + cuisine_codes.index(item.cuisine)] = 1.0

    for meal in item.meals:
        values[slices["meal"].start + MEAL_FLAGS.index(meal)] = 1.0
    values[slices["child"].start] = 1.0 if item.child_friendly else 0.0
    for flag in item.spiciness:
        values[slices["spice"].start + SPICE_FLAGS.index(flag)] = 1.0
    values[slices["price"].start + legend.price_bin(item.price)] = 1.0
    return FeatureVector(values=values, legend=legend)


def decode_categorical(vector: FeatureVector) -> dict[str, int]:
    """Recover the categorical codes from an encoded vector's one-hot blocks."""
    legend = vector.legend
    out: dict[str, int] = {}
    for block, codes in (("type", legend.type_codes), ("cuisine", legend.cuisine_codes)):
        values = vector.block(block)
        hot = np.flatnonzero(values)
        if hot.size != 1:
            raise InvariantError(f"{block} block is not one-hot: {values.tolist()}")
        out[block] = codes[int(hot[0])]
    return out


@dataclass(frozen=True)
class Corpus:
    items: tuple[DishItem, ...]
    legend: Legend
    index: Mapping[str, str]  # normalized name -> item_id (smallest on collision)

    def __len__(self) -> int:
        return len(self.items)

    def by_id(self, item_id: str) -> DishItem:
        return self._by_id[item_id]

    @property
    def _by_id(self) -> dict[str, DishItem]:
        cached = getattr(self, "_by_id_cache", None)
        if cached is None:
            cached = {item.item_id: item for item in self.items}
            object.__setattr__(self, "_by_id_cache", cached)
        return cached

    def items_sorted(self) -> list[DishItem]:
        return sorted(self.items, key=lambda item: item.item_id)

    def vectors(self) -> dict[str, FeatureVector]:
        cached = getattr(self, "_vectors_cache", None)
        if cached is None:
            cached = {i.item_id: encode_features(i, self.legend) for i in self.items}
            object.__setattr__(self, "_vectors_cache", cached)
        return cached

    def lookup_name(self, name: str) -> DishItem | None:
        item_id = self.index.get(normalize_name(name))
        return self.by_id(item_id) if item_id else None


def build_corpus(
    items: Iterable[DishItem], legend: Legend, rows: Sequence[int] | None = None
) -> Corpus:
    """Validate items, fit price bins, and assemble the lookup index.

    ``rows`` optionally carries source-file row numbers for diagnostics.
    """
    items = tuple(items)
    if not items:
        raise InvariantError("corpus must hold at least one item")
    if rows is None:
        rows = tuple(range(1, len(items) + 1))
    prices = np.array([item.price for item in items], dtype=np.float64)
    if legend.price_bin_count > 1:
        quantiles = np.linspace(0, 1, legend.price_bin_count + 1)[1:-1]
        edges = tuple(float(e) for e in np.quantile(prices, quantiles))
    else:
        edges = ()
    legend = replace(legend, price_edges=edges)

    seen_ids: set[str] = set()
    index: dict[str, str] = {}
    for row, item in zip(rows, items):
        item.validate(legend, row=row)
        if item.item_id in seen_ids:
            raise InvariantError(f"duplicate item_id {item.item_id!r}", row)
        seen_ids.add(item.item_id)
        key = normalize_name(item.name)
        incumbent = index.get(key)
        if incumbent is None or item.item_id < incumbent:
            index[key] = item.item_id
    return Corpus(items=items, legend=legend, index=index)


def load_corpus(path: str | Path) -> Corpus:
    """Load and fully validate a catalog file.

    Rejects on the first violation with a row-addressed diagnostic; a
    valid file yields a corpus whose index and price bins are ready for
    alignment queries.
    """
    path = Path(path)
    legend: Legend | None = None
    items: list[DishItem] = []
    rows: list[int] = []
    with path.open(encoding="utf-8") as handle:
        for row, line in enumerate(handle, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"invalid JSON: {exc}", row) from None
            if legend is None:
                if not isinstance(record, dict) or "legend" not in record:
                    raise FormatError("first record must be the legend block", row)
                legend = Legend.from_record(record["legend"], row=row)
                continue
            items.append(DishItem.from_record(record, row=row))
            rows.append(row)
    if legend is None:
        raise FormatError("file holds no legend block", row=1)
    return build_corpus(items, legend, rows=rows)


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as handle:
        handle.write(json.dumps({"legend": corpus.legend.to_record()}, ensure_ascii=False) + "\n")
        for item in corpus.items:
            handle.write(json.dumps(item.to_record(), ensure_ascii=False) + "\n")


def corpus_stats(corpus: Corpus) -> dict[str, dict[str, int]]:
    """Per-city and per-cuisine item counts."""
    by_city: dict[str, int] = {}
    by_cuisine: dict[str, int] = {}
    for item in corpus.items:
        by_city[item.city] = by_city.get(item.city, 0) + 1
        label = corpus.legend.cuisine[item.cuisine]
        by_cuisine[label] = by_cuisine.get(label, 0) + 1
    return {"by_city": dict(sorted(by_city.items())), "by_cuisine": dict(sorted(by_cuisine.items()))}
