"""Triple canonicalization and the three statistical filters."""

import math

import pytest

from techconverge.corpus import Document, TermPageIndex
from techconverge.extraction import RawTriple
from techconverge.normalize import (
    Drop,
    NormalizedTriple,
    book_filter,
    book_score,
    build_entropy_table,
    category_entropy,
    entropy_filter,
    frequency_filter,
    lemmatize,
    normalize_triple,
)


def _raw(subject, predicate, object_):
    return RawTriple(subject=subject, predicate=predicate, object=object_,
                     doc_id="d", date=(2022, 1))


def _norm(subject, object_, predicate="improve"):
    return NormalizedTriple(subject=subject, predicate=predicate, object=object_,
                            doc_id="d", date=(2022, 1))


# --- lemmatization -----------------------------------------------------------


@pytest.mark.parametrize(
    "word,hint,lemma",
    [
        ("sensors", "noun", "sensor"),
        ("batteries", "noun", "battery"),
        ("boxes", "noun", "box"),
        ("churches", "noun", "church"),
        ("glass", "noun", "glass"),  # -ss is not a plural marker
        ("running", "verb", "run"),
        ("studied", "verb", "study"),
        ("are", "verb", "be"),
        ("children", "noun", "child"),
        ("physics", "noun", "physics"),
    ],
)
def test_lemmatize_cases(word, hint, lemma):
    assert lemmatize(word, hint) == lemma


# --- normalization -----------------------------------------------------------


def test_normalize_worked_example():
    result = normalize_triple(
        _raw("Autonomous cars", "are", "the future of mobility")
    )
    assert isinstance(result, NormalizedTriple)
    assert result.subject == ("autonomous", "car")
    assert result.predicate == "be"
    assert result.object == ("future", "mobility")


def test_normalize_strips_punctuation_and_short_tokens():
    result = normalize_triple(_raw("e-commerce (new)", "boosts", "EU GDP growth"))
    assert isinstance(result, NormalizedTriple)
    assert result.subject == ("ecommerce", "new")
    assert result.object == ("gdp", "growth")  # "eu" is below 3 characters


def test_normalize_drops_long_sides():
    result = normalize_triple(
        _raw("one two three four five six seven", "has", "thing")
    )
    assert result == Drop("side longer than 6 words")


def test_normalize_drops_empty_sides():
    result = normalize_triple(_raw("the of", "has", "thing"))
    assert isinstance(result, Drop)
    assert "subject" in result.rule


# --- frequency filter --------------------------------------------------------


def test_frequency_filter_any_token_per_side():
    index = TermPageIndex(corpus_size=10, counts={"sensor": 8, "chip": 6, "rare": 1})
    triples = [
        _norm(("sensor",), ("chip",)),
        _norm(("rare", "sensor"), ("chip",)),  # one frequent token is enough
        _norm(("rare",), ("chip",)),
        _norm(("sensor",), ("rare",)),
    ]
    assert frequency_filter(triples, index, min_count=5) == triples[:2]


# --- book-score filter -------------------------------------------------------


def test_book_score_values():
    assert book_score(10, 100, 1, 1000) == pytest.approx(math.log(100), abs=1e-12)
    assert book_score(5, 100, 0, 1000) == math.inf
    assert book_score(0, 100, 5, 1000) == -math.inf
    with pytest.raises(ValueError):
        book_score(1, 0, 1, 10)


def test_book_filter_top_slice_with_ties():
    # ten scores; top 10% keeps the single best value plus its ties
    scores = {f"t{i}": float(i) for i in range(10)}
    scores["t8"] = 9.0  # tie with t9
    triples = [_norm((f"t{i}",), ("t9",)) for i in range(10)]
    kept = book_filter(triples, scores, top_fraction=0.10)
    assert [t.subject[0] for t in kept] == ["t8", "t9"]


def test_book_filter_requires_scores_for_all_tokens():
    with pytest.raises(KeyError):
        book_filter([_norm(("x",), ("y",))], {"x": 1.0}, top_fraction=0.5)


# --- entropy filter ----------------------------------------------------------


def test_category_entropy_values():
    assert category_entropy({"a": 0.5, "b": 0.5}) == pytest.approx(math.log(2), abs=1e-12)
    assert category_entropy({"a": 1.0, "b": 0.0}) == 0.0
    with pytest.raises(ValueError):
        category_entropy({"a": 1.5})


def test_entropy_filter_keeps_low_entropy_slice():
    entropy = {"focused": 0.0, "spread": 1.0, "mid": 0.4}
    triples = [
        _norm(("focused",), ("mid", "focused")),
        _norm(("spread",), ("focused",)),  # subject side all high entropy
        _norm(("spread",), ("spread",)),
    ]
    kept = entropy_filter(triples, entropy, keep_fraction=0.5)
    # threshold is the floor(0.5 * 3) = 1st smallest value -> 0.0; both sides
    # must carry a token at or below it
    assert kept == [triples[0]]


def test_build_entropy_table_containment():
    def doc(doc_id, cat, body):
        return Document(id=doc_id, source="preprint", title="t", abstract="",
                        body=body, year=2022, month=1, categories=(cat,))

    docs = [
        doc("a", "x", "alpha beta"),
        doc("b", "x", "alpha"),
        doc("c", "y", "alpha beta"),
    ]
    table = build_entropy_table(docs, ["x", "y"])
    # alpha: p=1 in both categories -> zero entropy
    assert table["alpha"] == pytest.approx(0.0, abs=1e-12)
    # beta: p=0.5 in x, p=1 in y -> 0.5*ln(2)
    assert table["beta"] == pytest.approx(0.5 * math.log(2), abs=1e-12)
