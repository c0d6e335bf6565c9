"""Zero-shot conversational dish recommendation with catalog alignment.

The model proposes dishes freely from the dialogue (it may invent names
that no restaurant sells); the aligner then maps every proposal onto the
loaded catalog by feature similarity, so each recommendation the
passenger sees is a real, orderable item.  Alignment order per proposal:
exact normalized-name match, else feature-similarity argmax when the
model supplied a feature tuple, else a lexical name-overlap fallback.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from importlib import resources
from typing import Mapping, Sequence

import numpy as np

from .backends import CompletionBackend
from .catalog import (
    MEAL_FLAGS,
    SPICE_FLAGS,
    Corpus,
    DishItem,
    FeatureVector,
    Legend,
    normalize_name,
)

logger = logging.getLogger(__name__)

DEFAULT_K = 10

BASIS_EXACT = "exact_name"
BASIS_FEATURE = "feature"
BASIS_LEXICAL = "lexical_fallback"


class EmptyRecommendationError(RuntimeError):
    """The model produced no parseable recommendation line, twice."""


class LegendMismatchError(ValueError):
    """Vectors from different legends cannot be compared."""


@dataclass(frozen=True)
class PassengerProfile:
    passenger_id: str
    gender: str | None = None
    age: int | None = None
    place_of_birth: str | None = None

    def __post_init__(self) -> None:
        if self.age is not None and not 0 <= self.age <= 130:
            raise ValueError(f"age out of range: {self.age}")

    def describe(self) -> str:
        parts = [f"id={self.passenger_id}"]
        if self.gender:
            parts.append(f"gender={self.gender}")
        if self.age is not None:
            parts.append(f"age={self.age}")
        if self.place_of_birth:
            parts.append(f"place_of_birth={self.place_of_birth}")
        return "; ".join(parts)


@dataclass(frozen=True)
class RecTurn:
    speaker: str  # "passenger" | "agent"
    utterance: str
    mentioned_items: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.speaker not in ("passenger", "agent"):
            raise ValueError(f"unknown speaker {self.speaker!r}")
        if self.speaker == "passenger" and not self.utterance.strip():
            raise ValueError("passenger turns must carry an utterance")


@dataclass(frozen=True)
class RecPromptTemplate:
    """Editable task/format text pair driving the recommendation call.

    The format instruction names every feature field the aligner consumes
    so that out-of-catalog proposals still arrive with comparable features.
    """

    task_description: str
    format_instruction: str

    def render(self, k: int, profile: PassengerProfile, history: Sequence[RecTurn]) -> str:
        transcript = "\n".join(f"{t.speaker.capitalize()}: {t.utterance}" for t in history)
        task = self.task_description.format(k=k, profile=profile.describe(), history=transcript)
        fmt = self.format_instruction.format(k=k)
        return f"{task}\n\n{fmt}\n\nConversation so far:\n{transcript}\n\nRecommendations:"

    @classmethod
    def load_default(cls) -> "RecPromptTemplate":
        base = resources.files("railagent").joinpath("data/templates")
        return cls(
            task_description=base.joinpath("rec_task.txt").read_text(encoding="utf-8"),
            format_instruction=base.joinpath("rec_format.txt").read_text(encoding="utf-8"),
        )


@dataclass(frozen=True)
class PartialFeatures:
    """A possibly-incomplete feature claim for a proposed item."""

    type_of_food: int | None = None
    cuisine: int | None = None
    meals: tuple[str, ...] = ()
    child_friendly: bool | None = None
    spiciness: tuple[str, ...] = ()
    price: float | None = None

    def populated_blocks(self) -> tuple[str, ...]:
        blocks = []
        if self.type_of_food is not None:
            blocks.append("type")
        if self.cuisine is not None:
            blocks.append("cuisine")
        if self.meals:
            blocks.append("meal")
        if self.child_friendly is not None:
            blocks.append("child")
        if self.spiciness:
            blocks.append("spice")
        if self.price is not None:
            blocks.append("price")
        return tuple(blocks)

    @property
    def is_empty(self) -> bool:
        return not self.populated_blocks()

    def block_arrays(self, legend: Legend) -> dict[str, np.ndarray]:
        """Encode the populated blocks into the legend's layout."""
        widths = legend.block_widths()
        arrays: dict[str, np.ndarray] = {}
        if self.type_of_food is not None:
            vec = np.zeros(widths["type"])
            if self.type_of_food in legend.type_codes:
                vec[legend.type_codes.index(self.type_of_food)] = 1.0
            arrays["type"] = vec
        if self.cuisine is not None:
            vec = np.zeros(widths["cuisine"])
            if self.cuisine in legend.cuisine_codes:
                vec[legend.cuisine_codes.index(self.cuisine)] = 1.0
            arrays["cuisine"] = vec
        if self.meals:
            vec = np.zeros(widths["meal"])
            for meal in self.meals:
                if meal in MEAL_FLAGS:
                    vec[MEAL_FLAGS.index(meal)] = 1.0
            arrays["meal"] = vec
        if self.child_friendly is not None:
            arrays["child"] = np.array([1.0 if self.child_friendly else 0.0])
        if self.spiciness:
            vec = np.zeros(widths["spice"])
            for flag in self.spiciness:
                if flag in SPICE_FLAGS:
                    vec[SPICE_FLAGS.index(flag)] = 1.0
            arrays["spice"] = vec
        if self.price is not None:
            vec = np.zeros(widths["price"])
            vec[legend.price_bin(self.price)] = 1.0
            arrays["price"] = vec
        return arrays


@dataclass(frozen=True)
class PreliminaryItem:
    name: str
    claimed_features: PartialFeatures | None = None

    def __post_init__(self) -> None:
        if not self.name.strip():
            raise ValueError("preliminary item name must be non-empty")


@dataclass(frozen=True)
class AlignedRecommendation:
    source: PreliminaryItem
    matched: DishItem
    similarity_score: float
    match_basis: str


def similarity(
    a: PartialFeatures | FeatureVector,
    b: FeatureVector,
    weights: Mapping[str, float] | None = None,
) -> float:
    """Weighted cosine similarity over the blocks populated in ``a``.

    Missing claimed-feature blocks are excluded from both sides, so a
    partial claim is compared only on what it asserts.  The result is in
    [0, 1]; all-zero restrictions score 0.
    """
    legend = b.legend
    if isinstance(a, FeatureVector):
        if a.legend.block_widths() != legend.block_widths():
            raise LegendMismatchError(
                f"vector dims differ: {a.legend.dimension} vs {legend.dimension}"
            )
        slices = legend.block_slices()
        blocks = {name: a.values[s] for name, s in slices.items()}
    else:
        blocks = a.block_arrays(legend)
        if not blocks:
            raise ValueError("at least one feature block must be populated")

    if weights is not None:
        unknown = set(weights) - set(legend.block_widths())
        if unknown:
            raise LegendMismatchError(f"unknown weight blocks: {sorted(unknown)}")

    numerator = 0.0
    norm_a = 0.0
    norm_b = 0.0
    for name, a_block in blocks.items():
        w = 1.0 if weights is None else float(weights.get(name, 0.0))
        if w < 0:
            raise ValueError(f"weight for block {name!r} must be non-negative")
        b_block = b.block(name)
        if a_block.shape != b_block.shape:
            raise LegendMismatchError(f"block {name!r} width differs")
        numerator += w * float(np.dot(a_block, b_block))
        norm_a += w * float(np.dot(a_block, a_block))
        norm_b += w * float(np.dot(b_block, b_block))
    if norm_a <= 0.0 or norm_b <= 0.0:
        return 0.0
    return float(np.clip(numerator / np.sqrt(norm_a * norm_b), 0.0, 1.0))


def _name_tokens(name: str) -> frozenset[str]:
    return frozenset(normalize_name(name).split())


def token_overlap(a: str, b: str) -> float:
    """Jaccard overlap of normalized name tokens."""
    ta, tb = _name_tokens(a), _name_tokens(b)
    if not ta or not tb:
        return 0.0
    return len(ta & tb) / len(ta | tb)


def align(
    preliminary: Sequence[PreliminaryItem],
    corpus: Corpus,
    k: int = DEFAULT_K,
    weights: Mapping[str, float] | None = None,
) -> list[AlignedRecommendation]:
    """Map free-form proposals onto catalog items.

    Every output references a catalog member.  Ties in the similarity and
    lexical scans break toward the ascending item id; duplicate matches
    are dropped keeping the first occurrence; the result is cut to ``k``.
    """
    if len(corpus) == 0:
        raise ValueError("corpus must be non-empty")
    if k < 1:
        raise ValueError("k must be positive")

    ordered_items = corpus.items_sorted()
    vectors = corpus.vectors()
    results: list[AlignedRecommendation] = []
    for item in preliminary:
        exact = corpus.lookup_name(item.name)
        if exact is not None:
            results.append(AlignedRecommendation(item, exact, 1.0, BASIS_EXACT))
            continue
        if item.claimed_features is not None and not item.claimed_features.is_empty:
            best_item, best_score = None, -1.0
            for candidate in ordered_items:
                score = similarity(item.claimed_features, vectors[candidate.item_id], weights)
                if score > best_score:
                    best_item, best_score = candidate, score
            assert best_item is not None
            results.append(AlignedRecommendation(item, best_item, best_score, BASIS_FEATURE))
            continue
        best_item, best_score = None, -1.0
        for candidate in ordered_items:
            score = token_overlap(item.name, candidate.name)
            if score > best_score:
                best_item, best_score = candidate, score
        assert best_item is not None
        results.append(AlignedRecommendation(item, best_item, best_score, BASIS_LEXICAL))

    deduped: list[AlignedRecommendation] = []
    seen: set[str] = set()
    for rec in results:
        if rec.matched.item_id in seen:
            continue
        seen.add(rec.matched.item_id)
        deduped.append(rec)
    return deduped[:k]


_NUMBERED_LINE = re.compile(r"^\s*\d+\s*[.):]\s*(.+?)\s*$")
_PRICE_TOKEN = re.compile(r"^(?:¥|cny\s*|rmb\s*)?(\d+(?:\.\d+)?)(?:\s*(?:yuan|cny|rmb))?$")

_CHILD_TRUE = {"yes", "y", "true", "1", "child-friendly", "child friendly", "kid-friendly"}
_CHILD_FALSE = {"no", "n", "false", "0"}


def _flag_token(raw: str, flags: tuple[str, ...]) -> str | None:
    token = raw.strip().casefold().replace("-", " ").replace("_", " ")
    for flag in flags:
        if token == flag.replace("_", " "):
            return flag
    return None


def parse_claimed_features(text: str, legend: Legend) -> PartialFeatures | None:
    """Parse a feature tuple claim such as ``type=Western; spiciness=mild``.

    Tolerates the loose form models actually produce ("Western, dessert,
    not spicy, ¥22"): bare tokens are resolved against the legend's labels
    and the flag vocabularies.  Unknown tokens are skipped.  Returns None
    when nothing was recognized.
    """
    text = text.strip()
    if not text:
        return None
    segments = [s for s in re.split(r";" if ";" in text else r",", text) if s.strip()]
    type_code: int | None = None
    cuisine_code: int | None = None
    meals: list[str] = []
    spiciness: list[str] = []
    child: bool | None = None
    price: float | None = None

    def absorb_bare(token: str) -> None:
        nonlocal type_code, cuisine_code, child, price
        token = token.strip()
        if not token:
            return
        if (code := legend.type_code_for(token)) is not None:
            type_code = type_code if type_code is not None else code
            return
        if (code := legend.cuisine_code_for(token)) is not None:
            cuisine_code = cuisine_code if cuisine_code is not None else code
            return
        if (flag := _flag_token(token, MEAL_FLAGS)) is not None:
            meals.append(flag)
            return
        if (flag := _flag_token(token, SPICE_FLAGS)) is not None:
            spiciness.append(flag)
            return
        folded = token.casefold()
        if folded in _CHILD_TRUE:
            child = True if child is None else child
            return
        if (m := _PRICE_TOKEN.match(folded)) is not None:
            price = float(m.group(1)) if price is None else price
            return
        logger.debug("ignoring unrecognized feature token: %r", token)

    for segment in segments:
        if "=" not in segment:
            absorb_bare(segment)
            continue
        key, _, value = segment.partition("=")
        key = key.strip().casefold()
        value = value.strip()
        if key in ("type", "type_of_food"):
            code = legend.type_code_for(value)
            if code is None and value.isdigit() and int(value) in legend.type_of_food:
                code = int(value)
            type_code = code if code is not None else type_code
        elif key == "cuisine":
            code = legend.cuisine_code_for(value)
            if code is None and value.isdigit() and int(value) in legend.cuisine:
                code = int(value)
            cuisine_code = code if code is not None else cuisine_code
        elif key in ("meals", "meal"):
            for token in value.split(","):
                if (flag := _flag_token(token, MEAL_FLAGS)) is not None:
                    meals.append(flag)
        elif key in ("spiciness", "spice"):
            for token in value.split(","):
                if (flag := _flag_token(token, SPICE_FLAGS)) is not None:
                    spiciness.append(flag)
        elif key in ("child_friendly", "child", "child-friendly"):
            folded = value.casefold()
            if folded in _CHILD_TRUE:
                child = True
            elif folded in _CHILD_FALSE:
                child = False
        elif key == "price":
            if (m := _PRICE_TOKEN.match(value.casefold())) is not None:
                price = float(m.group(1))
        else:
            logger.debug("ignoring unknown feature key: %r", key)

    claimed = PartialFeatures(
        type_of_food=type_code,
        cuisine=cuisine_code,
        meals=tuple(dict.fromkeys(meals)),
        child_friendly=child,
        spiciness=tuple(dict.fromkeys(spiciness)),
        price=price,
    )
    return None if claimed.is_empty else claimed


def parse_preliminary(completion: str, legend: Legend, k: int) -> list[PreliminaryItem]:
    """Parse a numbered recommendation list; malformed lines are dropped."""
    items: list[PreliminaryItem] = []
    for line in completion.splitlines():
        if not line.strip():
            continue
        match = _NUMBERED_LINE.match(line)
        if match is None:
            logger.warning("dropping malformed recommendation line: %r", line.strip())
            continue
        body = match.group(1)
        name, claimed_text = body, None
        if body.endswith(")") and "(" in body:
            name, _, claimed_text = body[:-1].rpartition("(")
            name = name.strip()
        if not name:
            logger.warning("dropping recommendation line with empty name: %r", line.strip())
            continue
        claimed = parse_claimed_features(claimed_text, legend) if claimed_text else None
        items.append(PreliminaryItem(name=name, claimed_features=claimed))
        if len(items) >= k:
            break
    return items


_REPROMPT_REMINDER = (
    "\n\nYour previous reply could not be parsed. Reply again with only the "
    "numbered list, one item per line, in the exact form the instructions describe."
)


def recommend_preliminary(
    backend: CompletionBackend,
    profile: PassengerProfile,
    history: Sequence[RecTurn],
    k: int,
    legend: Legend,
    template: RecPromptTemplate | None = None,
) -> list[PreliminaryItem]:
    """Ask the model for up to ``k`` free-form proposals.

    Re-prompts once when nothing parses, then raises
    :class:`EmptyRecommendationError`.
    """
    if k < 1:
        raise ValueError("k must be positive")
    if not any(turn.speaker == "passenger" for turn in history):
        raise ValueError("history must contain at least one passenger turn")
    template = template or RecPromptTemplate.load_default()
    prompt = template.render(k, profile, history)
    completion = backend.complete(prompt)
    items = parse_preliminary(completion, legend, k)
    if not items:
        completion = backend.complete(prompt + _REPROMPT_REMINDER)
        items = parse_preliminary(completion, legend, k)
    if not items:
        raise EmptyRecommendationError("no recommendation lines parsed after re-prompt")
    return items


def recommend(
    backend: CompletionBackend,
    profile: PassengerProfile,
    history: Sequence[RecTurn],
    corpus: Corpus,
    k: int = DEFAULT_K,
    template: RecPromptTemplate | None = None,
    weights: Mapping[str, float] | None = None,
) -> list[AlignedRecommendation]:
    """Propose then align: every returned item is a catalog member."""
    preliminary = recommend_preliminary(backend, profile, history, k, corpus.legend, template)
    return align(preliminary, corpus, k, weights)
