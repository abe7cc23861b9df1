"""Triple normalization and the three-stage statistical term filter.

Normalization rules, applied in order: lowercase; drop triples whose subject
or object exceeds 6 words; remove stopwords; strip non-alphanumeric
characters; lemmatize (noun rules for subject/object tokens, verb rules for
the predicate); drop tokens shorter than 3 characters; drop the triple if
either side empties out.

Filtering keeps a triple only when both its subject and object contain at
least one qualifying token: frequent enough in the control corpus, scored in
the top slice against the book corpus, and of low cross-category entropy.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from .corpus import TermPageIndex
from .extraction import RawTriple
from .resources import lemma_exceptions, stopwords

MAX_SIDE_WORDS = 6
MIN_TOKEN_CHARS = 3

_VOWELS = set("aeiou")
_NON_ALNUM = re.compile(r"[^a-z0-9]+")


@dataclass(frozen=True)
class NormalizedTriple:
    subject: tuple[str, ...]
    predicate: str
    object: tuple[str, ...]
    doc_id: str
    date: tuple[int, int]
    categories: tuple[str, ...] = ()

    @property
    def subject_text(self) -> str:
        return " ".join(self.subject)

    @property
    def object_text(self) -> str:
        return " ".join(self.object)


@dataclass(frozen=True)
class Drop:
    """Marker for a triple rejected during normalization."""

    rule: str


def _strip_noun_suffix(word: str) -> str:
    if word.endswith("ies") and len(word) > 4:
        return word[:-3] + "y"
    if word.endswith("es") and len(word) > 3 and word[-3] in "sxz":
        return word[:-2]
    if word.endswith(("ches", "shes")) and len(word) > 4:
        return word[:-2]
    if word.endswith("s") and len(word) > 3 and not word.endswith(("ss", "us", "is")):
        return word[:-1]
    return word


def _strip_verb_suffix(word: str) -> str:
    if word.endswith("ies") and len(word) > 4:
        return word[:-3] + "y"
    if word.endswith("ied") and len(word) > 4:
        return word[:-3] + "y"
    for suffix in ("ing", "ed"):
        if word.endswith(suffix) and len(word) > len(suffix) + 2:
            stem = word[: -len(suffix)]
            # undo consonant doubling: running -> run
            if len(stem) >= 3 and stem[-1] == stem[-2] and stem[-1] not in "lsz" and stem[-1] not in _VOWELS:
                return stem[:-1]
            return stem
    if word.endswith("es") and len(word) > 3 and word[-3] in "sxz":
        return word[:-2]
    if word.endswith("s") and len(word) > 3 and not word.endswith(("ss", "us", "is")):
        return word[:-1]
    return word


def lemmatize(word: str, pos_hint: str = "unknown") -> str:
    """Rule-based lemmatization: exception table first, then suffix rules."""
    table = lemma_exceptions()
    if word in table:
        return table[word]
    if pos_hint == "verb":
        return _strip_verb_suffix(word)
    return _strip_noun_suffix(word)


def _normalize_side(words: list[str], stop: frozenset[str]) -> tuple[str, ...]:
    tokens = []
    for word in words:
        if word in stop:
            continue
        cleaned = _NON_ALNUM.sub("", word)
        if not cleaned:
            continue
        lemma = lemmatize(cleaned, "noun")
        if len(lemma) >= MIN_TOKEN_CHARS:
            tokens.append(lemma)
    return tuple(tokens)


def normalize_triple(raw: RawTriple) -> NormalizedTriple | Drop:
    """Canonicalize one raw triple, or return Drop(rule) explaining rejection."""
    stop = stopwords()
    subject_words = raw.subject.lower().split()
    object_words = raw.object.lower().split()
    if len(subject_words) > MAX_SIDE_WORDS or len(object_words) > MAX_SIDE_WORDS:
        return Drop("side longer than 6 words")
    subject = _normalize_side(subject_words, stop)
    object_ = _normalize_side(object_words, stop)
    if not subject:
        return Drop("empty subject after normalization")
    if not object_:
        return Drop("empty object after normalization")
    predicate_tokens = []
    for word in raw.predicate.lower().split():
        cleaned = _NON_ALNUM.sub("", word)
        if cleaned:
            predicate_tokens.append(lemmatize(cleaned, "verb"))
    if not predicate_tokens:
        return Drop("empty predicate after normalization")
    return NormalizedTriple(
        subject=subject,
        predicate=" ".join(predicate_tokens),
        object=object_,
        doc_id=raw.doc_id,
        date=raw.date,
        categories=raw.categories,
    )


# --- statistical filters -----------------------------------------------------


def frequency_filter(
    triples: list[NormalizedTriple], index: TermPageIndex, min_count: int = 5
) -> list[NormalizedTriple]:
    """Keep triples where subject and object each have a token used at least
    min_count times in the control corpus."""

    def side_ok(tokens: tuple[str, ...]) -> bool:
        return any(index.count(t) >= min_count for t in tokens)

    return [t for t in triples if side_ok(t.subject) and side_ok(t.object)]


def book_score(f_cc: int, n_papers: int, f_b: int, n_books: int) -> float:
    """Log-ratio of control-corpus rate to book-corpus rate; +inf when the
    term never appears in the book corpus."""
    if n_papers <= 0 or n_books <= 0:
        raise ValueError("corpus sizes must be positive")
    if f_b == 0:
        return math.inf
    if f_cc == 0:
        return -math.inf
    return math.log(f_cc / n_papers) - math.log(f_b / n_books)


def _triple_tokens(triples: list[NormalizedTriple]) -> set[str]:
    tokens: set[str] = set()
    for t in triples:
        tokens.update(t.subject)
        tokens.update(t.object)
    return tokens


def _top_threshold(values: list[float], fraction: float) -> float:
    """Value such that the top `fraction` of the sorted list (ties included)
    is everything >= it."""
    ranked = sorted(values, reverse=True)
    k = max(1, math.floor(fraction * len(ranked)))
    return ranked[k - 1]


def _bottom_threshold(values: list[float], fraction: float) -> float:
    ranked = sorted(values)
    k = max(1, math.floor(fraction * len(ranked)))
    return ranked[k - 1]


def book_filter(
    triples: list[NormalizedTriple],
    scores: dict[str, float],
    top_fraction: float = 0.10,
) -> list[NormalizedTriple]:
    """Keep triples whose subject and object each contain a token scoring in
    the top slice of all distinct token scores (+inf is always in)."""
    if not triples:
        return []
    if not (0.0 < top_fraction <= 1.0):
        raise ValueError("top_fraction must be in (0, 1]")
    if top_fraction == 1.0:
        return list(triples)
    tokens = _triple_tokens(triples)
    missing = tokens - scores.keys()
    if missing:
        raise KeyError(f"no book score for tokens: {sorted(missing)[:5]}")
    threshold = _top_threshold([scores[t] for t in tokens], top_fraction)

    def side_ok(side: tuple[str, ...]) -> bool:
        return any(scores[t] >= threshold for t in side)

    return [t for t in triples if side_ok(t.subject) and side_ok(t.object)]


def category_entropy(p_by_category: dict[str, float]) -> float:
    """Sum of p * ln(1/p) over per-category occurrence probabilities
    (0 * ln(1/0) taken as 0; probabilities are not a normalized distribution)."""
    total = 0.0
    for p in p_by_category.values():
        if not (0.0 <= p <= 1.0):
            raise ValueError(f"probability out of range: {p}")
        if p > 0.0:
            total += p * math.log(1.0 / p)
    return total


def entropy_filter(
    triples: list[NormalizedTriple],
    entropy: dict[str, float],
    keep_fraction: float = 0.5,
) -> list[NormalizedTriple]:
    """Keep triples whose subject and object each contain a token in the
    low-entropy (field-informative) slice of all distinct tokens."""
    if not triples:
        return []
    if not (0.0 < keep_fraction <= 1.0):
        raise ValueError("keep_fraction must be in (0, 1]")
    if keep_fraction == 1.0:
        return list(triples)
    tokens = _triple_tokens(triples)
    missing = tokens - entropy.keys()
    if missing:
        raise KeyError(f"no entropy for tokens: {sorted(missing)[:5]}")
    threshold = _bottom_threshold([entropy[t] for t in tokens], keep_fraction)

    def side_ok(side: tuple[str, ...]) -> bool:
        return any(entropy[t] <= threshold for t in side)

    return [t for t in triples if side_ok(t.subject) and side_ok(t.object)]


def build_entropy_table(docs, categories: list[str]) -> dict[str, float]:
    """Entropy per token from per-category containment probabilities.

    P(token in doc | doc in category) is the fraction of each category's
    documents whose body contains the token.
    """
    from .corpus import tokenize

    docs_by_cat: dict[str, list[set[str]]] = {c: [] for c in categories}
    all_tokens: set[str] = set()
    for doc in docs:
        token_set = set(tokenize(doc.body))
        all_tokens.update(token_set)
        for cat in doc.categories:
            if cat in docs_by_cat:
                docs_by_cat[cat].append(token_set)
    table: dict[str, float] = {}
    for token in all_tokens:
        probs = {}
        for cat, token_sets in docs_by_cat.items():
            if token_sets:
                probs[cat] = sum(token in ts for ts in token_sets) / len(token_sets)
            else:
                probs[cat] = 0.0
        table[token] = category_entropy(probs)
    return table
