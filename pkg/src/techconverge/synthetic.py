"""Synthetic corpus generator with planted ground truth.

Builds a small document corpus in the standard JSONL schema where two topic
areas ("quantum sensors" and "photonic chips") start disconnected and are
increasingly linked in the second half of the calendar, while a background
pair ("gene therapy" / "wind turbines") co-occurs at a constant rate.  The
generator controls the truth, so integration tests can assert that the
convergence ranking finds the planted pair and that its edge classifies as
emerging.

Everything is deterministic given the seed.
"""

from __future__ import annotations

import json
import random
from pathlib import Path

TOPIC_A = "quantum sensors"
TOPIC_B = "photonic chips"
BACKGROUND_C = "gene therapy"
BACKGROUND_D = "wind turbines"

START_YEAR = 2022
N_MONTHS = 24
LINK_START_MONTH = 13  # 1-based month index where A-B linking begins

_FILLERS = [
    "laboratory benchmarks track calibration drift",
    "measurement noise limits detector resolution",
    "prototype hardware meets deployment constraints",
    "simulation frameworks guide parameter choices",
]


def _period(month_index: int) -> tuple[int, int]:
    """1-based month index -> (year, month)."""
    offset = month_index - 1
    return (START_YEAR + offset // 12, offset % 12 + 1)


def _doc(doc_id, year, month, category, phrases, link=None):
    # Bodies repeat each topic phrase (and a shared object phrase) several
    # times so the planted vocabulary clears the per-page frequency bar.
    # Abstracts keep each phrase surrounded by stopwords so the keyterm
    # extractor sees it as a clean standalone noun run.
    sentences = []
    for phrase in phrases:
        sentences.append(f"The {phrase} improve detection hardware.")
        sentences.append(f"The {phrase} support detection hardware.")
        sentences.append(f"The {phrase} enhance detection hardware.")
    if link:
        left, right = link
        sentences.append(f"The {left} improve {right}.")
        sentences.append(f"The {left} enhance {right}.")
        sentences.append(f"The {left} support {right}.")
    abstract = " ".join(
        f"Our study is about the {p}. We report new results for the {p}. "
        f"This note gives further analysis of the {p}."
        for p in phrases
    )
    return {
        "id": doc_id,
        "source": "preprint",
        "title": f"A study of {' and '.join(phrases)}",
        "abstract": abstract,
        "body": " ".join(sentences),
        "year": year,
        "month": month,
        "categories": [category],
    }


def generate_corpus(n_docs: int = 200, seed: int = 0) -> list[dict]:
    """Documents with the planted convergence between TOPIC_A and TOPIC_B."""
    rng = random.Random(seed)
    docs = []
    counter = 0

    def add(category, phrases, link=None):
        nonlocal counter
        counter += 1
        year, month = period
        docs.append(_doc(f"syn-{counter:04d}", year, month, category, phrases, link))

    for month_index in range(1, N_MONTHS + 1):
        period = _period(month_index)
        for _ in range(3):
            add("q.SN", [TOPIC_A])
        for _ in range(3):
            add("p.CH", [TOPIC_B])
        add("bio.GT", [BACKGROUND_C, BACKGROUND_D], link=(BACKGROUND_C, BACKGROUND_D))
        if month_index >= LINK_START_MONTH:
            n_links = 1 + (month_index - LINK_START_MONTH) // 4
            for _ in range(n_links):
                add("qp.XL", [TOPIC_A, TOPIC_B], link=(TOPIC_A, TOPIC_B))

    # pad with filler documents spread over the calendar to reach n_docs
    month_index = 1
    while len(docs) < n_docs:
        period = _period(month_index)
        filler = rng.choice(_FILLERS)
        counter += 1
        year, month = period
        docs.append(
            {
                "id": f"syn-{counter:04d}",
                "source": "preprint",
                "title": "Background engineering note",
                "abstract": f"This work studies general instrumentation. {filler} across technology platforms.",
                "body": f"{filler.capitalize()}. " * 3,
                "year": year,
                "month": month,
                "categories": ["misc"],
            }
        )
        month_index = month_index % N_MONTHS + 1
    return docs[:n_docs]


def generate_book_corpus(n_books: int = 20, seed: int = 1) -> list[dict]:
    """Generic prose 'books' free of the planted topic vocabulary, for the
    informativeness filter."""
    rng = random.Random(seed)
    common = [
        "people walked along the river in the evening light",
        "the house stood quiet at the edge of the town",
        "conversation drifted from the garden into the kitchen",
        "morning came slowly over the hills and fields",
    ]
    books = []
    for i in range(n_books):
        sentences = [rng.choice(common).capitalize() + "." for _ in range(40)]
        books.append(
            {
                "id": f"book-{i:03d}",
                "source": "preprint",
                "title": f"Book {i}",
                "abstract": "A general book.",
                "body": " ".join(sentences),
                "year": 2000,
                "month": 1,
                "categories": [],
            }
        )
    return books


def write_jsonl(records: list[dict], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(record, sort_keys=True) + "\n")
