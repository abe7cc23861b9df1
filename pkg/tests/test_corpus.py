"""Corpus loading, validation and the term/page frequency index."""

import json

import pytest

from techconverge.corpus import (
    CorpusError,
    Document,
    build_term_page_index,
    estimate_pages,
    load_corpus,
    select_by_terms,
    tokenize,
)


def _record(doc_id="d1", **overrides):
    base = {
        "id": doc_id,
        "source": "preprint",
        "title": "A title",
        "abstract": "An abstract.",
        "body": "Some body text.",
        "year": 2022,
        "month": 5,
        "categories": ["cs.AI"],
    }
    base.update(overrides)
    return base


def _write(path, records):
    path.write_text("\n".join(json.dumps(r) for r in records) + "\n", encoding="utf-8")


def test_tokenize_lowercase_alnum():
    assert tokenize("Quantum-ready sensors, 2x faster!") == [
        "quantum", "ready", "sensors", "2x", "faster",
    ]


def test_load_corpus_roundtrip(tmp_path):
    path = tmp_path / "corpus.jsonl"
    _write(path, [_record("a"), _record("b")])
    docs, errors = load_corpus(path)
    assert [d.id for d in docs] == ["a", "b"]
    assert errors == []


def test_load_corpus_collects_bad_records(tmp_path):
    path = tmp_path / "corpus.jsonl"
    good = _record("a")
    bad_month = _record("b", month=13)
    path.write_text(
        json.dumps(good) + "\n" + "not json\n" + json.dumps(bad_month) + "\n",
        encoding="utf-8",
    )
    docs, errors = load_corpus(path)
    assert [d.id for d in docs] == ["a"]
    assert len(errors) == 2
    assert {e.line_number for e in errors} == {2, 3}


def test_load_corpus_flags_duplicate_ids(tmp_path):
    path = tmp_path / "corpus.jsonl"
    _write(path, [_record("a"), _record("a")])
    docs, errors = load_corpus(path)
    assert len(docs) == 2
    assert len(errors) == 1 and "duplicate" in errors[0].message


def test_load_corpus_missing_file():
    with pytest.raises(CorpusError):
        load_corpus("/nonexistent/corpus.jsonl")


def test_document_validation():
    with pytest.raises(ValueError):
        Document(id="", source="preprint", title="t", abstract="", body="", year=2022, month=1)
    with pytest.raises(ValueError):
        Document(id="x", source="preprint", title="t", abstract="", body="", year=1800, month=1)


def test_select_by_terms_case_insensitive_substring():
    docs = [
        Document(id="a", source="preprint", title="Quantum sensing", abstract="", body="", year=2022, month=1),
        Document(id="b", source="preprint", title="Plain title", abstract="about QUANTUM stuff", body="", year=2022, month=1),
        Document(id="c", source="preprint", title="Other", abstract="nothing", body="quantum", year=2022, month=1),
    ]
    selected = select_by_terms(docs, ["quantum"])
    assert [d.id for d in selected] == ["a", "b"]  # body is not a query field


def test_select_by_terms_requires_terms():
    with pytest.raises(ValueError):
        select_by_terms([], [])


def test_estimate_pages_prefers_explicit_count():
    doc = Document(id="a", source="preprint", title="t", abstract="", body="x" * 9000,
                   year=2022, month=1, page_count=2)
    assert estimate_pages(doc) == 2
    doc = Document(id="a", source="preprint", title="t", abstract="", body="x" * 9000,
                   year=2022, month=1)
    assert estimate_pages(doc) == 3


def test_term_page_index_counts_dense_documents():
    docs = [
        Document(id="a", source="preprint", title="t", abstract="",
                 body="alpha alpha alpha beta", year=2022, month=1, page_count=1),
        Document(id="b", source="preprint", title="t", abstract="",
                 body="alpha alpha gamma", year=2022, month=1, page_count=1),
        Document(id="c", source="preprint", title="t", abstract="",
                 body="alpha delta", year=2022, month=1, page_count=1),
    ]
    index = build_term_page_index(docs, per_page_min=2.0)
    assert index.count("alpha") == 2  # dense in a and b, sparse in c
    assert index.count("beta") == 0
    assert index.count("unseen") == 0
    assert index.corpus_size == 3
