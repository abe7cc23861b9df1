"""Term similarity kernel, keyterm extraction and topic clustering."""

import random
from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from techconverge.stapling import (
    ContrastiveKeytermExtractor,
    KeywordRecord,
    TopicCluster,
    as_term_set,
    cluster_keywords,
    extract_keyterms,
    name_cluster,
    qgram_sim,
    qgrams,
    soft_cardinality,
    soft_dice,
    staple,
)


# --- independent oracle: direct transcription of the similarity formulas -----


def oracle_qgrams(s, q=3):
    padded = "#" * (q - 1) + s + "#" * (q - 1)
    return Counter(padded[i : i + q] for i in range(len(padded) - q + 1))


def oracle_qgram_sim(s1, s2, q=3):
    g1, g2 = oracle_qgrams(s1, q), oracle_qgrams(s2, q)
    mismatch = sum(abs(g1[g] - g2[g]) for g in set(g1) | set(g2))
    return 1.0 - mismatch / (sum(g1.values()) + sum(g2.values()))


def oracle_soft_cardinality(tokens, q=3):
    return sum(
        1.0 / sum(oracle_qgram_sim(a, b, q) for b in tokens) for a in tokens
    )


def oracle_soft_dice(t1, t2, q=3):
    c1 = oracle_soft_cardinality(t1, q)
    c2 = oracle_soft_cardinality(t2, q)
    inter = c1 + c2 - oracle_soft_cardinality(tuple(t1) + tuple(t2), q)
    return min(1.0, max(0.0, 2.0 * inter / (c1 + c2)))


_WORDS = [
    "dog", "dogs", "church", "model", "models", "network", "networks",
    "quantum", "sensor", "sensors", "large", "language", "graph", "data",
]


def test_qgram_sim_hand_value():
    # q=3 with two pad chars a side: "##dog##" has 5 grams, "##dogs##" has 6,
    # 3 of them shared -> 1 - 5/11 = 6/11
    assert qgram_sim("dog", "dogs") == pytest.approx(6 / 11, abs=1e-12)


def test_qgram_sim_bounds_and_identity():
    assert qgram_sim("word", "word") == 1.0
    assert 0.0 <= qgram_sim("abc", "xyz") <= 1.0


def test_similarity_matches_oracle_on_random_pairs():
    rng = random.Random(13)
    for _ in range(300):
        t1 = tuple(rng.choices(_WORDS, k=rng.randint(1, 4)))
        t2 = tuple(rng.choices(_WORDS, k=rng.randint(1, 4)))
        assert qgram_sim(t1[0], t2[0]) == pytest.approx(
            oracle_qgram_sim(t1[0], t2[0]), abs=1e-12
        )
        assert soft_cardinality(t1) == pytest.approx(oracle_soft_cardinality(t1), abs=1e-12)
        assert soft_dice(t1, t2) == pytest.approx(oracle_soft_dice(t1, t2), abs=1e-12)


def test_soft_cardinality_orders_near_duplicates_below_unrelated():
    near = soft_cardinality(as_term_set("dog dogs"))
    unrelated = soft_cardinality(as_term_set("dog church"))
    assert near < unrelated
    assert unrelated == pytest.approx(2.0, abs=0.05)


def test_soft_dice_symmetric_and_bounded():
    t1, t2 = as_term_set("large language models"), as_term_set("large language model")
    assert soft_dice(t1, t2) == pytest.approx(soft_dice(t2, t1), abs=1e-15)
    assert soft_dice(t1, t1) == 1.0
    assert soft_dice(t1, t2) >= 0.85  # near-duplicates staple together


@given(st.text("abcdefg", min_size=1, max_size=8), st.text("abcdefg", min_size=1, max_size=8))
@settings(max_examples=200)
def test_qgram_sim_property(s1, s2):
    value = qgram_sim(s1, s2)
    assert 0.0 <= value <= 1.0
    assert value == pytest.approx(qgram_sim(s2, s1), abs=1e-15)
    assert value == pytest.approx(oracle_qgram_sim(s1, s2), abs=1e-12)


def test_qgrams_validation():
    with pytest.raises(ValueError):
        qgrams("", 3)
    with pytest.raises(ValueError):
        qgrams("abc", 0)


def test_staple_map_is_symmetric():
    terms = ["question answering", "question answerin", "wind turbines"]
    similar = staple(terms, threshold=0.85)
    assert "question answerin" in similar["question answering"]
    assert "question answering" in similar["question answerin"]
    assert similar["wind turbines"] == []


# --- keyterm extraction ------------------------------------------------------


def test_extract_keyterms_noun_runs():
    abstract = "Our study is about the quantum sensors. We report new results."
    terms = extract_keyterms(abstract, k=10)
    assert "quantum sensors" in terms
    assert all(1 <= len(t.split()) <= 4 for t in terms)
    assert len(terms) <= 10


def test_extract_keyterms_contrastive_weighting():
    # a token common in the control corpus is down-weighted
    extractor = ContrastiveKeytermExtractor(
        control_counts={"results": 90}, control_size=100
    )
    abstract = "These results concern the quantum sensors and more results."
    terms = extract_keyterms(abstract, k=2, extractor=extractor)
    assert terms[0] == "quantum sensors"


def test_extract_keyterms_rejects_empty_and_zero_k():
    with pytest.raises(ValueError):
        extract_keyterms("  ")
    assert extract_keyterms("some words here", k=0) == []


# --- clustering --------------------------------------------------------------


def _reference_clusters(keywords, threshold):
    """Literal greedy reference: walk keywords by frequency, recompute the
    pairwise similarity, absorb unassigned similar keywords."""
    assigned = set()
    clusters = []
    for record in keywords:
        if record.term in assigned:
            continue
        members = [record.term]
        assigned.add(record.term)
        for other in keywords:
            if other.term in assigned:
                continue
            if soft_dice(as_term_set(record.term), as_term_set(other.term)) >= threshold:
                members.append(other.term)
                assigned.add(other.term)
        clusters.append(members)
    return clusters


def _random_keywords(rng, n):
    pool = [
        "neural network", "neural networks", "quantum sensor", "quantum sensors",
        "gene therapy", "wind turbine", "wind turbines", "language model",
        "language models", "solar cell", "solar cells", "graph", "graphs",
        "deep learning", "transfer learning",
    ]
    terms = rng.sample(pool, n)
    records = [KeywordRecord(term=t, extraction_count=rng.randint(1, 50)) for t in terms]
    records.sort(key=lambda r: (-r.extraction_count, r.term))
    return records


def test_clustering_matches_reference_on_random_sets():
    rng = random.Random(99)
    for _ in range(100):
        keywords = _random_keywords(rng, rng.randint(1, 12))
        similar = staple([k.term for k in keywords], threshold=0.85, prefilter=False)
        clusters = cluster_keywords(keywords, similar)
        expected = _reference_clusters(keywords, threshold=0.85)
        assert [sorted(c.members) for c in clusters] == [sorted(m) for m in expected]
        assert [c.id for c in clusters] == list(range(len(clusters)))


def test_cluster_keywords_requires_sorted_input():
    records = [
        KeywordRecord(term="b", extraction_count=1),
        KeywordRecord(term="a", extraction_count=5),
    ]
    with pytest.raises(ValueError):
        cluster_keywords(records, {})


def test_cluster_every_keyword_assigned_once():
    rng = random.Random(5)
    keywords = _random_keywords(rng, 12)
    similar = staple([k.term for k in keywords], threshold=0.85)
    clusters = cluster_keywords(keywords, similar)
    seen = [m for c in clusters for m in c.members]
    assert sorted(seen) == sorted(k.term for k in keywords)


# --- cluster naming ----------------------------------------------------------


def test_name_cluster_most_common_token_run():
    # frequency first: "language" is in all three members, the bigram in two
    members = ["large language models", "language models", "language model zoo"]
    assert name_cluster(members) == "language"
    # when the bigram is just as common, length breaks the tie
    members = ["large language models", "language models", "new language models"]
    assert name_cluster(members) == "language models"


def test_name_cluster_tie_prefers_longest_then_smallest():
    assert name_cluster(["alpha beta", "alpha beta"]) == "alpha beta"
    # "bar" and "foo" both shared by two members; lexicographically smaller wins
    assert name_cluster(["bar", "bar", "foo", "foo"]) == "bar"


def test_name_cluster_falls_back_to_seed():
    assert name_cluster(["apple pie", "wind farm"], seed="apple pie") == "apple pie"
    assert name_cluster(["only"], seed="only") == "only"


def test_name_cluster_char_level():
    name = name_cluster(["preprocessing", "processing"], level="char")
    assert name == "processing"


def test_topic_cluster_shape():
    cluster = TopicCluster(id=0, name="n", seed="s", members=["s"])
    assert cluster.members == ["s"]
