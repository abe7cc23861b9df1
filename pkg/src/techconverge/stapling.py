"""Noun stapling: grouping compound terms that name the same concept.

Similarity is purely syntactic, combining character-level q-gram matching
with a token-level Dice coefficient computed over *soft* cardinalities, so
"large language model" and "large language models" count as near-identical
while staying cheap enough for very large term lists.

Note on the q-gram similarity normalization: the difference in q-gram
multiplicities is divided by the **total** q-gram count of both strings
(|Q1| + |Q2|), the standard normalization that keeps the measure in [0, 1].

Also here: the greedy frequency-ordered keyword clustering, cluster naming
by most common token subsequence, and triple-to-topic assignment.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache

from .resources import stopwords

PAD_CHAR = "#"
STAPLE_THRESHOLD = 0.85

TermSet = tuple[str, ...]


def as_term_set(term: str) -> TermSet:
    tokens = tuple(term.split())
    if not tokens:
        raise ValueError("term must be nonempty")
    return tokens


def qgrams(s: str, q: int = 3) -> Counter:
    """Multiset of length-q windows over s padded with q-1 sentinels a side."""
    if q < 1:
        raise ValueError("q must be >= 1")
    if not s:
        raise ValueError("s must be nonempty")
    padded = PAD_CHAR * (q - 1) + s + PAD_CHAR * (q - 1)
    return Counter(padded[i : i + q] for i in range(len(padded) - q + 1))


@lru_cache(maxsize=65536)
def _cached_qgrams(s: str, q: int) -> Counter:
    return qgrams(s, q)


def qgram_sim(s1: str, s2: str, q: int = 3) -> float:
    """1 minus the normalized q-gram multiplicity mismatch; in [0, 1]."""
    grams1 = _cached_qgrams(s1, q)
    grams2 = _cached_qgrams(s2, q)
    mismatch = 0
    for gram in grams1.keys() | grams2.keys():
        mismatch += abs(grams1[gram] - grams2[gram])
    return 1.0 - mismatch / (sum(grams1.values()) + sum(grams2.values()))


def soft_cardinality(term: TermSet, q: int = 3) -> float:
    """Relaxed set size: near-duplicate tokens contribute less than one."""
    if not term:
        raise ValueError("term set must be nonempty")
    total = 0.0
    for a in term:
        row = sum(qgram_sim(a, b, q) for b in term)
        total += 1.0 / row
    return total


def soft_dice(t1: TermSet, t2: TermSet, q: int = 3) -> float:
    """Dice coefficient over soft cardinalities, clamped to [0, 1].

    The soft intersection comes from inclusion-exclusion on the concatenated
    token lists: |a ∩ b| = |a| + |b| - |a ∪ b|.
    """
    card1 = soft_cardinality(t1, q)
    card2 = soft_cardinality(t2, q)
    union = soft_cardinality(t1 + t2, q)
    intersection = card1 + card2 - union
    dice = 2.0 * intersection / (card1 + card2)
    return min(1.0, max(0.0, dice))


def staple(
    terms: list[str],
    threshold: float = STAPLE_THRESHOLD,
    prefilter: bool = True,
) -> dict[str, list[str]]:
    """Symmetric similarity map: u maps to v iff soft_dice(u, v) >= threshold.

    The optional prefilter skips pairs whose token counts differ by more than
    a factor of two; such pairs cannot reach a high Dice value for natural
    terms, and the quadratic pair count makes the skip worthwhile.
    """
    if not (0.0 < threshold <= 1.0):
        raise ValueError("threshold must be in (0, 1]")
    token_sets = {term: as_term_set(term) for term in terms}
    similar: dict[str, list[str]] = {term: [] for term in terms}
    unique = list(token_sets)
    for i, u in enumerate(unique):
        tu = token_sets[u]
        for v in unique[i + 1 :]:
            tv = token_sets[v]
            if prefilter and not (0.5 <= len(tu) / len(tv) <= 2.0):
                continue
            if soft_dice(tu, tv) >= threshold:
                similar[u].append(v)
                similar[v].append(u)
    return similar


# --- keyword extraction ------------------------------------------------------


@dataclass(frozen=True)
class KeywordRecord:
    term: str
    extraction_count: int


class ContrastiveKeytermExtractor:
    """Default key-term extractor: scores candidate noun-run n-grams by how
    much more frequent their tokens are in the target corpus than in a
    control corpus."""

    def __init__(self, control_counts: dict[str, int] | None = None, control_size: int = 1,
                 max_ngram: int = 4):
        self.control_counts = control_counts or {}
        self.control_size = max(1, control_size)
        self.max_ngram = max_ngram

    def _token_weight(self, token: str) -> float:
        rate = self.control_counts.get(token, 0) / self.control_size
        return math.log(2.0 / (1.0 + rate))

    def __call__(self, abstract: str, k: int) -> list[str]:
        from .corpus import tokenize

        stop = stopwords()
        tokens = tokenize(abstract)
        runs: list[list[str]] = []
        current: list[str] = []
        for token in tokens:
            if token in stop or len(token) < 3:
                if current:
                    runs.append(current)
                current = []
            else:
                current.append(token)
        if current:
            runs.append(current)

        counts: Counter = Counter()
        for run in runs:
            for n in range(1, self.max_ngram + 1):
                for start in range(len(run) - n + 1):
                    counts[" ".join(run[start : start + n])] += 1
        scored = []
        for candidate, count in counts.items():
            weight = sum(self._token_weight(t) for t in candidate.split())
            scored.append((count * weight, candidate))
        scored.sort(key=lambda item: (-item[0], item[1]))
        return [candidate for _, candidate in scored[:k]]


def extract_keyterms(abstract: str, k: int = 10, extractor=None) -> list[str]:
    """Up to k candidate key terms (1-4 tokens each) for one abstract."""
    if not abstract.strip():
        raise ValueError("abstract must be nonempty")
    if k <= 0:
        return []
    extractor = extractor or ContrastiveKeytermExtractor()
    terms = extractor(abstract, k)
    return [t for t in terms if 1 <= len(t.split()) <= 4][:k]


# --- clustering --------------------------------------------------------------


@dataclass
class TopicCluster:
    id: int
    name: str
    seed: str
    members: list[str]


def cluster_keywords(
    keywords: list[KeywordRecord],
    similar: dict[str, list[str]],
    naming: str = "token",
) -> list[TopicCluster]:
    """Greedy frequency-ordered clustering.

    Iterates keywords from most to least extracted; each unassigned keyword
    founds a cluster and absorbs all of its similar, not-yet-assigned
    keywords.  Input must be sorted by extraction_count descending (ties
    broken lexicographically).
    """
    order = [(-k.extraction_count, k.term) for k in keywords]
    if order != sorted(order):
        raise ValueError("keywords must be sorted by extraction count descending")
    assigned: set[str] = set()
    clusters: list[TopicCluster] = []
    for record in keywords:
        term = record.term
        if term in assigned:
            continue
        members = [term]
        for other in similar.get(term, []):
            if other in assigned or other == term:
                continue
            members.append(other)
            assigned.add(other)
        assigned.add(term)
        clusters.append(
            TopicCluster(
                id=len(clusters),
                name=name_cluster(members, seed=term, level=naming),
                seed=term,
                members=members,
            )
        )
    return clusters


def _token_subsequences(term: str) -> set[tuple[str, ...]]:
    tokens = term.split()
    subs = set()
    for i in range(len(tokens)):
        for j in range(i + 1, len(tokens) + 1):
            subs.add(tuple(tokens[i:j]))
    return subs


def _char_substrings(term: str) -> set[str]:
    return {term[i:j] for i in range(len(term)) for j in range(i + 1, len(term) + 1)}


def name_cluster(members: list[str], seed: str | None = None, level: str = "token") -> str:
    """Most common (token- or character-level) substring across the members;
    ties prefer the longest, then the lexicographically smallest.  Falls back
    to the seed when nothing is shared by more than one member."""
    if not members:
        raise ValueError("members must be nonempty")
    seed = seed or members[0]
    if len(members) == 1:
        return members[0]
    if level == "token":
        candidate_sets = [_token_subsequences(m) for m in members]
        join = " ".join
    elif level == "char":
        candidate_sets = [_char_substrings(m) for m in members]
        join = "".join
    else:
        raise ValueError(f"unknown naming level: {level}")
    counts: Counter = Counter()
    for cand_set in candidate_sets:
        for cand in cand_set:
            counts[cand] += 1
    best = None
    for cand, count in counts.items():
        length = len(cand)
        text = join(cand) if level == "token" else cand
        key = (count, length, _Reversed(text))
        if best is None or key > best[0]:
            best = (key, text, count)
    if best is None or best[2] <= 1:
        return seed
    return best[1]


class _Reversed:
    """Orders strings descending so that max() picks the lexicographically
    smallest on ties."""

    def __init__(self, value: str):
        self.value = value

    def __lt__(self, other: "_Reversed") -> bool:
        return self.value > other.value

    def __gt__(self, other: "_Reversed") -> bool:
        return self.value < other.value

    def __eq__(self, other: object) -> bool:
        return isinstance(other, _Reversed) and self.value == other.value


def assign_triple_to_topics(
    triple,
    clusters: list[TopicCluster],
    threshold: float = STAPLE_THRESHOLD,
) -> set[int]:
    """Cluster ids whose members match the triple's subject or object phrase
    at the stapling threshold.  May be empty or contain several ids."""
    subject = tuple(triple.subject)
    object_ = tuple(triple.object)
    matched: set[int] = set()
    for cluster in clusters:
        for member in cluster.members:
            member_set = as_term_set(member)
            if (
                soft_dice(subject, member_set) >= threshold
                or soft_dice(object_, member_set) >= threshold
            ):
                matched.add(cluster.id)
                break
    return matched
