"""Loaders for the word lists and prompt assets bundled with the package."""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources


def _data_text(name: str) -> str:
    return resources.files("techconverge.data").joinpath(name).read_text(encoding="utf-8")


@lru_cache(maxsize=None)
def stopwords() -> frozenset[str]:
    return frozenset(w for w in _data_text("stopwords.txt").split() if w)


@lru_cache(maxsize=None)
def closed_class_words() -> frozenset[str]:
    return frozenset(w for w in _data_text("closed_class.txt").split() if w)


@lru_cache(maxsize=None)
def verb_lexicon() -> frozenset[str]:
    words = []
    for line in _data_text("verbs.txt").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            words.append(line)
    return frozenset(words)


@lru_cache(maxsize=None)
def lemma_exceptions() -> dict[str, str]:
    table = {}
    for line in _data_text("lemma_exceptions.txt").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        word, lemma = line.split("\t")
        table[word] = lemma
    return table


@lru_cache(maxsize=None)
def fewshot_prompt() -> dict:
    return json.loads(_data_text("fewshot_prompt.json"))
