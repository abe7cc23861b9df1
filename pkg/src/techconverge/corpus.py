"""Corpus loading, sub-corpus selection and per-term page-frequency indexing.

A corpus is a JSONL file, one document per line:

    {"id": ..., "source": "preprint"|"patent", "title": ..., "abstract": ...,
     "body": ..., "year": ..., "month": ..., "categories": [...], "pages": optional}

Terms are counted into a :class:`TermPageIndex` when they appear often enough
per page on average; the downstream statistical filters consume these indexes.
"""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

CHARS_PER_PAGE = 3000

_TOKEN_RE = re.compile(r"[a-z0-9]+")


class CorpusError(Exception):
    """Raised when a corpus file cannot be read at all."""


@dataclass(frozen=True)
class Document:
    id: str
    source: str  # "preprint" or "patent"
    title: str
    abstract: str
    body: str
    year: int
    month: int
    categories: tuple[str, ...] = ()
    page_count: int | None = None

    def __post_init__(self):
        if not self.id:
            raise ValueError("document id must be nonempty")
        if self.source not in ("preprint", "patent"):
            raise ValueError(f"unknown source kind: {self.source!r}")
        if not (1900 <= self.year <= 2100):
            raise ValueError(f"year out of range: {self.year}")
        if not (1 <= self.month <= 12):
            raise ValueError(f"month out of range: {self.month}")
        if self.page_count is not None and self.page_count < 1:
            raise ValueError(f"page_count must be positive: {self.page_count}")

    @property
    def date(self) -> tuple[int, int]:
        return (self.year, self.month)


@dataclass
class RecordError:
    line_number: int
    message: str


@dataclass
class TermPageIndex:
    """Per-term document counts over a corpus.

    ``counts[t]`` is the number of documents in which token ``t`` occurs at
    least ``per_page_min`` times per page on average.  Absent terms count 0.
    """

    corpus_size: int
    counts: Counter = field(default_factory=Counter)

    def count(self, term: str) -> int:
        return self.counts.get(term, 0)


def tokenize(text: str) -> list[str]:
    """Lowercase and split on non-alphanumeric runs."""
    return _TOKEN_RE.findall(text.lower())


_REQUIRED_FIELDS = ("id", "source", "title", "abstract", "year", "month")


def load_corpus(path: str | Path) -> tuple[list[Document], list[RecordError]]:
    """Load a JSONL corpus.

    Returns the documents in file order plus a list of per-record errors
    (malformed JSON, missing fields, invariant violations) with line numbers.
    Raises :class:`CorpusError` if the file itself is unreadable.
    """
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise CorpusError(f"cannot read corpus file {path}: {exc}") from exc

    docs: list[Document] = []
    errors: list[RecordError] = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            errors.append(RecordError(lineno, f"invalid JSON: {exc.msg}"))
            continue
        missing = [f for f in _REQUIRED_FIELDS if f not in record]
        if missing:
            errors.append(RecordError(lineno, f"missing fields: {', '.join(missing)}"))
            continue
        try:
            docs.append(
                Document(
                    id=str(record["id"]),
                    source=record["source"],
                    title=record["title"],
                    abstract=record["abstract"],
                    body=record.get("body", ""),
                    year=int(record["year"]),
                    month=int(record["month"]),
                    categories=tuple(record.get("categories", [])),
                    page_count=record.get("pages"),
                )
            )
        except (ValueError, TypeError) as exc:
            errors.append(RecordError(lineno, str(exc)))
    ids = [d.id for d in docs]
    if len(set(ids)) != len(ids):
        seen: set[str] = set()
        for d in docs:
            if d.id in seen:
                errors.append(RecordError(0, f"duplicate document id: {d.id}"))
            seen.add(d.id)
    return docs, errors


def select_by_terms(
    docs: list[Document],
    terms: list[str],
    fields: tuple[str, ...] = ("title", "abstract"),
) -> list[Document]:
    """Keep documents containing at least one term in at least one field.

    Matching is case-insensitive whole-substring; input order is preserved.
    """
    if not terms:
        raise ValueError("terms must be nonempty (an empty list would select everything)")
    bad = set(fields) - {"title", "abstract"}
    if bad:
        raise ValueError(f"unknown fields: {sorted(bad)}")
    lowered = [t.lower() for t in terms]
    selected = []
    for doc in docs:
        haystacks = [getattr(doc, f).lower() for f in fields]
        if any(term in hay for term in lowered for hay in haystacks):
            selected.append(doc)
    return selected


def estimate_pages(doc: Document) -> int:
    """Page count from metadata if present, else ~3000 body characters/page."""
    if doc.page_count is not None:
        return doc.page_count
    return max(1, math.ceil(len(doc.body) / CHARS_PER_PAGE))


def build_term_page_index(docs: list[Document], per_page_min: float = 3.0) -> TermPageIndex:
    """Count, per token, the documents where it averages >= per_page_min uses per page."""
    if not docs:
        raise ValueError("docs must be nonempty")
    counts: Counter = Counter()
    for doc in docs:
        pages = estimate_pages(doc)
        occurrences = Counter(tokenize(doc.body))
        for token, n in occurrences.items():
            if n / pages >= per_page_min:
                counts[token] += 1
    return TermPageIndex(corpus_size=len(docs), counts=counts)
