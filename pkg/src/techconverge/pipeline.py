"""Stage orchestration: each stage reads upstream artifacts from the
workdir, writes its own, and records a manifest entry with input/output
hashes so unchanged stages are skipped on rerun.

Stage order: ingest -> preprocess -> extract -> normalize -> filter;
preprocess -> staple -> cluster; (filter, cluster) -> assign -> graph ->
(trends, converge, export).
"""

from __future__ import annotations

import csv
import hashlib
import json
import time
from pathlib import Path

from . import corpus as corpus_mod
from . import graphs as graphs_mod
from . import normalize as normalize_mod
from . import stapling as stapling_mod
from . import trends as trends_mod
from .config import PipelineConfig
from .corpus import Document, build_term_page_index, load_corpus, select_by_terms
from .extraction import (
    ChatEndpointClient,
    ExtractionConfig,
    RawTriple,
    extract_fallback,
    extract_llm,
)
from .preprocess import dehyphenate, expand_abbreviations, preprocess_text, strip_citations


class StageError(Exception):
    pass


class MissingDependencyError(StageError):
    def __init__(self, stage: str, missing_stage: str):
        super().__init__(f"stage '{stage}' needs artifacts from '{missing_stage}': run that stage first")
        self.missing_stage = missing_stage


STAGE_ORDER = [
    "ingest",
    "preprocess",
    "extract",
    "normalize",
    "filter",
    "staple",
    "cluster",
    "assign",
    "graph",
    "trends",
    "converge",
    "export",
]

STAGE_DEPS = {
    "ingest": [],
    "preprocess": ["ingest"],
    "extract": ["preprocess"],
    "normalize": ["extract"],
    "filter": ["normalize", "ingest"],
    "staple": ["preprocess"],
    "cluster": ["staple"],
    "assign": ["filter", "cluster"],
    "graph": ["assign"],
    "trends": ["assign", "staple"],
    "converge": ["graph"],
    "export": ["graph"],
}

STAGE_OUTPUTS = {
    "ingest": ["documents.jsonl", "selected.jsonl"],
    "preprocess": ["preprocessed.jsonl", "abbreviations.json"],
    "extract": ["triples.jsonl", "report.json"],
    "normalize": ["normalized.jsonl", "drops.json"],
    "filter": ["filtered.jsonl", "scores.csv"],
    "staple": ["keyterm_records.jsonl", "keywords.json", "similar.json"],
    "cluster": ["clusters.json"],
    "assign": ["assignments.jsonl"],
    "graph": ["graph.json"],
    "trends": ["trends.csv", "risers.json"],
    "converge": ["jaccard.csv", "convergences.json"],
    "export": ["topics.gexf", "topics.dot"],
}


def _hash_file(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for block in iter(lambda: handle.read(65536), b""):
            digest.update(block)
    return digest.hexdigest()


def _hash_config(config: PipelineConfig) -> str:
    return hashlib.sha256(
        json.dumps(config.to_dict(), sort_keys=True).encode()
    ).hexdigest()


def _period_key(year: int, month: int) -> str:
    return f"{year:04d}-{month:02d}"


def _parse_period(key: str) -> tuple[int, int]:
    year, month = key.split("-")
    return (int(year), int(month))


def _write_jsonl(path: Path, records) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(record, sort_keys=True) + "\n")


def _read_jsonl(path: Path):
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            if line.strip():
                yield json.loads(line)


def _write_json(path: Path, data) -> None:
    path.write_text(json.dumps(data, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _doc_to_record(doc: Document) -> dict:
    record = {
        "id": doc.id,
        "source": doc.source,
        "title": doc.title,
        "abstract": doc.abstract,
        "body": doc.body,
        "year": doc.year,
        "month": doc.month,
        "categories": list(doc.categories),
    }
    if doc.page_count is not None:
        record["pages"] = doc.page_count
    return record


def _record_to_doc(record: dict) -> Document:
    return Document(
        id=record["id"],
        source=record["source"],
        title=record["title"],
        abstract=record["abstract"],
        body=record.get("body", ""),
        year=record["year"],
        month=record["month"],
        categories=tuple(record.get("categories", [])),
        page_count=record.get("pages"),
    )


def _triple_to_record(triple: RawTriple) -> dict:
    return {
        "s": triple.subject,
        "p": triple.predicate,
        "o": triple.object,
        "doc_id": triple.doc_id,
        "year": triple.date[0],
        "month": triple.date[1],
        "categories": list(triple.categories),
    }


def _record_to_triple(record: dict) -> RawTriple:
    return RawTriple(
        subject=record["s"],
        predicate=record["p"],
        object=record["o"],
        doc_id=record["doc_id"],
        date=(record["year"], record["month"]),
        categories=tuple(record.get("categories", [])),
    )


def _normalized_to_record(triple: normalize_mod.NormalizedTriple) -> dict:
    return {
        "s": list(triple.subject),
        "p": triple.predicate,
        "o": list(triple.object),
        "doc_id": triple.doc_id,
        "year": triple.date[0],
        "month": triple.date[1],
        "categories": list(triple.categories),
    }


def _record_to_normalized(record: dict) -> normalize_mod.NormalizedTriple:
    return normalize_mod.NormalizedTriple(
        subject=tuple(record["s"]),
        predicate=record["p"],
        object=tuple(record["o"]),
        doc_id=record["doc_id"],
        date=(record["year"], record["month"]),
        categories=tuple(record.get("categories", [])),
    )


# --- stage implementations ---------------------------------------------------


def _stage_ingest(config: PipelineConfig, workdir: Path, outdir: Path) -> None:
    docs, errors = load_corpus(config.main_corpus)
    if errors:
        for error in errors:
            print(f"  line {error.line_number}: {error.message}")
    if config.query_terms:
        selected = select_by_terms(docs, config.query_terms, tuple(config.query_fields))
    else:
        selected = docs
    _write_jsonl(outdir / "documents.jsonl", (_doc_to_record(d) for d in docs))
    _write_jsonl(outdir / "selected.jsonl", (_doc_to_record(d) for d in selected))


def _stage_preprocess(config: PipelineConfig, workdir: Path, outdir: Path) -> None:
    abbreviation_dump = {}
    records = []
    for record in _read_jsonl(workdir / "ingest" / "selected.jsonl"):
        body, abbreviations = preprocess_text(record.get("body", ""))
        abstract = dehyphenate(strip_citations(record.get("abstract", "")))
        abstract = expand_abbreviations(abstract, abbreviations)
        record = dict(record)
        record["body"] = body
        record["abstract"] = abstract
        records.append(record)
        if abbreviations:
            abbreviation_dump[record["id"]] = dict(sorted(abbreviations.items()))
    _write_jsonl(outdir / "preprocessed.jsonl", records)
    _write_json(outdir / "abbreviations.json", abbreviation_dump)


def _stage_extract(config: PipelineConfig, workdir: Path, outdir: Path) -> None:
    docs = [_record_to_doc(r) for r in _read_jsonl(workdir / "preprocess" / "preprocessed.jsonl")]
    all_triples: list[RawTriple] = []
    report_data: dict = {"mode": "fallback" if config.use_fallback else "endpoint"}
    if config.use_fallback:
        for doc in docs:
            all_triples.extend(extract_fallback(doc))
    else:
        cfg = ExtractionConfig(
            base_url=config.endpoint_url,
            model=config.model,
            temperature=config.temperature,
            max_in_flight=config.max_in_flight,
            api_key_env=config.api_key_env,
        )
        client = ChatEndpointClient(cfg)
        paragraphs = well_formed = n_triples = 0
        for doc in docs:
            triples, report = extract_llm(doc, client, cfg)
            all_triples.extend(triples)
            paragraphs += report.paragraphs
            well_formed += report.well_formed
            n_triples += report.triples
        report_data.update(
            {
                "paragraphs": paragraphs,
                "well_formed": well_formed,
                "pct_well_formed": 100.0 * well_formed / paragraphs if paragraphs else 100.0,
            }
        )
    report_data["triples"] = len(all_triples)
    _write_jsonl(outdir / "triples.jsonl", (_triple_to_record(t) for t in all_triples))
    _write_json(outdir / "report.json", report_data)


def _stage_normalize(config: PipelineConfig, workdir: Path, outdir: Path) -> None:
    drops: dict[str, int] = {}
    records = []
    for record in _read_jsonl(workdir / "extract" / "triples.jsonl"):
        result = normalize_mod.normalize_triple(_record_to_triple(record))
        if isinstance(result, normalize_mod.Drop):
            drops[result.rule] = drops.get(result.rule, 0) + 1
        else:
            records.append(_normalized_to_record(result))
    _write_jsonl(outdir / "normalized.jsonl", records)
    _write_json(outdir / "drops.json", drops)


def _stage_filter(config: PipelineConfig, workdir: Path, outdir: Path) -> None:
    triples = [
        _record_to_normalized(r)
        for r in _read_jsonl(workdir / "normalize" / "normalized.jsonl")
    ]
    control_docs, _ = load_corpus(config.control_corpus or config.main_corpus)
    control_index = build_term_page_index(control_docs, config.per_page_min)
    book_docs, _ = load_corpus(config.book_corpus) if config.book_corpus else ([], [])
    book_index = (
        build_term_page_index(book_docs, config.per_page_min) if book_docs else None
    )
    main_docs = [_record_to_doc(r) for r in _read_jsonl(workdir / "ingest" / "documents.jsonl")]
    categories = sorted({c for d in main_docs for c in d.categories})
    entropy_table = normalize_mod.build_entropy_table(main_docs, categories)

    survivors = normalize_mod.frequency_filter(triples, control_index, config.min_count)

    tokens = sorted(normalize_mod._triple_tokens(survivors) | normalize_mod._triple_tokens(triples))
    scores: dict[str, float] = {}
    for token in tokens:
        if book_index is None:
            scores[token] = float("inf")
        else:
            scores[token] = normalize_mod.book_score(
                control_index.count(token),
                control_index.corpus_size,
                book_index.count(token),
                book_index.corpus_size,
            )
    survivors = normalize_mod.book_filter(survivors, scores, config.top_fraction)

    entropy = {t: entropy_table.get(t, 0.0) for t in tokens}
    survivors = normalize_mod.entropy_filter(survivors, entropy, config.keep_fraction)

    _write_jsonl(outdir / "filtered.jsonl", (_normalized_to_record(t) for t in survivors))
    with open(outdir / "scores.csv", "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["term", "f_cc", "book_score", "entropy"])
        for token in tokens:
            score = scores[token]
            writer.writerow(
                [
                    token,
                    control_index.count(token),
                    "inf" if score == float("inf") else f"{score:.6f}",
                    f"{entropy[token]:.6f}",
                ]
            )


def _stage_staple(config: PipelineConfig, workdir: Path, outdir: Path) -> None:
    control_docs, _ = load_corpus(config.control_corpus or config.main_corpus)
    control_counts: dict[str, int] = {}
    for doc in control_docs:
        for token in set(corpus_mod.tokenize(doc.body)):
            control_counts[token] = control_counts.get(token, 0) + 1
    extractor = stapling_mod.ContrastiveKeytermExtractor(
        control_counts=control_counts, control_size=len(control_docs)
    )
    records = []
    counts: dict[str, int] = {}
    for record in _read_jsonl(workdir / "preprocess" / "preprocessed.jsonl"):
        abstract = record.get("abstract", "")
        if not abstract.strip():
            continue
        for term in stapling_mod.extract_keyterms(
            abstract, config.keyterms_per_abstract, extractor
        ):
            records.append(
                {
                    "doc_id": record["id"],
                    "year": record["year"],
                    "month": record["month"],
                    "term": term,
                }
            )
            counts[term] = counts.get(term, 0) + 1
    keywords = sorted(counts.items(), key=lambda item: (-item[1], item[0]))
    similar = stapling_mod.staple([t for t, _ in keywords], config.staple_threshold)
    _write_jsonl(outdir / "keyterm_records.jsonl", records)
    _write_json(
        outdir / "keywords.json",
        [{"term": term, "count": count} for term, count in keywords],
    )
    _write_json(outdir / "similar.json", {t: sorted(v) for t, v in similar.items()})


def _stage_cluster(config: PipelineConfig, workdir: Path, outdir: Path) -> None:
    keywords = [
        stapling_mod.KeywordRecord(item["term"], item["count"])
        for item in json.loads((workdir / "staple" / "keywords.json").read_text())
    ]
    similar = json.loads((workdir / "staple" / "similar.json").read_text())
    clusters = stapling_mod.cluster_keywords(keywords, similar, config.cluster_naming)
    counts = {item.term: item.extraction_count for item in keywords}
    _write_json(
        outdir / "clusters.json",
        [
            {
                "id": c.id,
                "name": c.name,
                "seed": c.seed,
                "members": c.members,
                "count": sum(counts.get(m, 0) for m in c.members),
            }
            for c in clusters
        ],
    )


def _load_clusters(workdir: Path) -> list[stapling_mod.TopicCluster]:
    data = json.loads((workdir / "cluster" / "clusters.json").read_text())
    return [
        stapling_mod.TopicCluster(
            id=item["id"], name=item["name"], seed=item["seed"], members=item["members"]
        )
        for item in data
    ]


def _stage_assign(config: PipelineConfig, workdir: Path, outdir: Path) -> None:
    clusters = _load_clusters(workdir)
    records = []
    cache: dict[tuple, list[int]] = {}  # distinct (subject, object) pairs are few
    for record in _read_jsonl(workdir / "filter" / "filtered.jsonl"):
        triple = _record_to_normalized(record)
        key = (triple.subject, triple.object)
        topics = cache.get(key)
        if topics is None:
            topics = sorted(
                stapling_mod.assign_triple_to_topics(
                    triple, clusters, config.staple_threshold
                )
            )
            cache[key] = topics
        record = dict(record)
        record["topic_ids"] = topics
        records.append(record)
    _write_jsonl(outdir / "assignments.jsonl", records)


def _load_assignments(workdir: Path):
    for record in _read_jsonl(workdir / "assign" / "assignments.jsonl"):
        yield _record_to_normalized(record), set(record["topic_ids"])


def _stage_graph(config: PipelineConfig, workdir: Path, outdir: Path) -> None:
    graph = graphs_mod.build_topic_graph(_load_assignments(workdir))
    clusters = {c.id: c.name for c in _load_clusters(workdir)}
    split = tuple(config.trend_split)
    partition = graphs_mod.louvain(graph, config.resolution, config.seed)
    centrality = graphs_mod.eigenvector_centrality(graph)
    trend_labels = {
        pair: graphs_mod.classify_edge_trend(data, split, config.trend_share)
        for pair, data in graph.edges.items()
    }
    data = {
        "nodes": [
            {
                "id": node,
                "name": clusters.get(node, str(node)),
                "triple_count": graph.nodes[node]["triple_count"],
                "community": partition.assignment.get(node, -1),
                "centrality": round(centrality.get(node, 0.0), 9),
            }
            for node in sorted(graph.nodes)
        ],
        "edges": [
            {
                "source": a,
                "target": b,
                "weight": graph.edges[(a, b)].weight,
                "trend": trend_labels[(a, b)].label,
                "late_share": round(trend_labels[(a, b)].late_share, 9),
                "per_period": {
                    _period_key(*p): c
                    for p, c in sorted(graph.edges[(a, b)].per_period.items())
                },
            }
            for a, b in sorted(graph.edges)
        ],
        "topic_periods": {
            str(topic): {
                _period_key(*p): sorted(ids) for p, ids in sorted(periods.items())
            }
            for topic, periods in sorted(graph.topic_periods.items())
        },
        "seed": config.seed,
        "resolution": config.resolution,
    }
    _write_json(outdir / "graph.json", data)


def _load_graph(workdir: Path):
    data = json.loads((workdir / "graph" / "graph.json").read_text())
    graph = graphs_mod.TopicGraph()
    names = {}
    partition = {}
    centrality = {}
    trends = {}
    for node in data["nodes"]:
        graph.nodes[node["id"]] = {"triple_count": node["triple_count"]}
        names[node["id"]] = node["name"]
        partition[node["id"]] = node["community"]
        centrality[node["id"]] = node["centrality"]
    for edge in data["edges"]:
        entry = graph.edge(edge["source"], edge["target"])
        entry.weight = edge["weight"]
        for key, count in edge["per_period"].items():
            entry.per_period[_parse_period(key)] = count
        trends[(edge["source"], edge["target"])] = graphs_mod.EdgeTrend(
            label=edge["trend"], late_share=edge["late_share"]
        )
    topic_periods = {
        int(topic): {_parse_period(k): set(ids) for k, ids in periods.items()}
        for topic, periods in data["topic_periods"].items()
    }
    return graph, names, graphs_mod.Partition(partition), centrality, trends, topic_periods


def _stage_trends(config: PipelineConfig, workdir: Path, outdir: Path) -> None:
    assignments = list(_load_assignments(workdir))
    clusters = {c.id: c.name for c in _load_clusters(workdir)}
    topic_ids = sorted({t for _, topics in assignments for t in topics})

    rows = []
    seasonal_acc: dict[int, list[float]] = {}
    for topic in topic_ids:
        series = trends_mod.monthly_counts(assignments, topic)
        try:
            decomposition = trends_mod.seasonal_decompose(series)
        except ValueError:
            continue
        name = clusters.get(topic, str(topic))
        for period in series.periods():
            rows.append(
                [
                    f"topic:{name}",
                    _period_key(*period),
                    series.values[period],
                    f"{decomposition.trend[period]:.6f}" if period in decomposition.trend else "",
                    f"{decomposition.seasonal.get(period[1], 0.0):.6f}",
                    f"{decomposition.residual[period]:.6f}" if period in decomposition.residual else "",
                ]
            )
        for month, value in decomposition.seasonal.items():
            seasonal_acc.setdefault(month, []).append(value)
    for month in sorted(seasonal_acc):
        values = seasonal_acc[month]
        rows.append(
            ["seasonal_mean", f"{month:02d}", "", "", f"{sum(values) / len(values):.6f}", ""]
        )

    with open(outdir / "trends.csv", "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["series", "period", "observed", "trend", "seasonal", "residual"])
        writer.writerows(rows)

    # key-term riser ranking from the extraction records
    term_docs: dict[str, dict[tuple[int, int], set[str]]] = {}
    for record in _read_jsonl(workdir / "staple" / "keyterm_records.jsonl"):
        period = (record["year"], record["month"])
        term_docs.setdefault(record["term"], {}).setdefault(period, set()).add(
            record["doc_id"]
        )
    term_series = {
        term: trends_mod.TimeSeries.from_counts(
            {p: len(docs) for p, docs in periods.items()}
        )
        for term, periods in term_docs.items()
    }
    risers = trends_mod.top_risers(
        term_series,
        tuple(config.analysis_from),
        tuple(config.analysis_to),
        config.risers_k,
    )
    _write_json(
        outdir / "risers.json",
        [{"term": term, "trend_delta": round(delta, 9)} for term, delta in risers],
    )


def _stage_converge(config: PipelineConfig, workdir: Path, outdir: Path) -> None:
    graph, names, _, _, _, topic_periods = _load_graph(workdir)
    series = {}
    for a, b in sorted(graph.edges):
        series[(a, b)] = graphs_mod.jaccard_timeseries(
            topic_periods.get(a, {}), topic_periods.get(b, {})
        )
    with open(outdir / "jaccard.csv", "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["topic_a", "topic_b", "period", "jaccard"])
        for (a, b), values in series.items():
            for period, value in values.items():
                writer.writerow([names[a], names[b], _period_key(*period), f"{value:.6f}"])
    ranked = graphs_mod.top_convergences(
        series,
        tuple(config.analysis_from),
        tuple(config.analysis_to),
        config.convergence_k,
    )
    _write_json(
        outdir / "convergences.json",
        [
            {
                "topic_a": names[a],
                "topic_b": names[b],
                "topic_a_id": a,
                "topic_b_id": b,
                "jaccard_delta": round(delta, 9),
            }
            for (a, b), delta in ranked
        ],
    )


def _stage_export(config: PipelineConfig, workdir: Path, outdir: Path) -> None:
    graph, names, partition, centrality, trends, _ = _load_graph(workdir)
    graphs_mod.write_gexf(
        graph,
        outdir / "topics.gexf",
        names=names,
        partition=partition,
        centrality=centrality,
        trends=trends,
    )
    graphs_mod.write_dot(graph, outdir / "topics.dot", names=names, trends=trends)


_STAGE_FUNCS = {
    "ingest": _stage_ingest,
    "preprocess": _stage_preprocess,
    "extract": _stage_extract,
    "normalize": _stage_normalize,
    "filter": _stage_filter,
    "staple": _stage_staple,
    "cluster": _stage_cluster,
    "assign": _stage_assign,
    "graph": _stage_graph,
    "trends": _stage_trends,
    "converge": _stage_converge,
    "export": _stage_export,
}


# --- manifest and orchestration ---------------------------------------------


def _stage_input_files(stage: str, config: PipelineConfig, workdir: Path) -> list[Path]:
    files = []
    for dep in STAGE_DEPS[stage]:
        for name in STAGE_OUTPUTS[dep]:
            files.append(workdir / dep / name)
    if stage == "ingest":
        files.append(Path(config.main_corpus))
    if stage in ("filter", "staple"):
        if config.control_corpus:
            files.append(Path(config.control_corpus))
        if stage == "filter" and config.book_corpus:
            files.append(Path(config.book_corpus))
    return files


def _manifest_entries(workdir: Path) -> list[dict]:
    manifest = workdir / "manifest.jsonl"
    if not manifest.exists():
        return []
    return list(_read_jsonl(manifest))


def run_stage(
    stage: str, config: PipelineConfig, workdir: str | Path, force: bool = False
) -> dict:
    """Run one stage; returns its manifest entry.  Skips the work when input
    and config hashes match the previous run (unless force)."""
    if stage not in _STAGE_FUNCS:
        raise StageError(f"unknown stage: {stage}")
    workdir = Path(workdir)
    workdir.mkdir(parents=True, exist_ok=True)

    for dep in STAGE_DEPS[stage]:
        for name in STAGE_OUTPUTS[dep]:
            if not (workdir / dep / name).exists():
                raise MissingDependencyError(stage, dep)

    input_files = _stage_input_files(stage, config, workdir)
    input_hashes = {}
    for path in input_files:
        if not path.exists():
            raise StageError(f"input file missing for stage '{stage}': {path}")
        input_hashes[str(path)] = _hash_file(path)
    config_hash = _hash_config(config)

    outdir = workdir / stage
    if not force:
        for entry in reversed(_manifest_entries(workdir)):
            if entry["stage"] != stage:
                continue
            outputs_ok = all(
                (outdir / name).exists()
                and _hash_file(outdir / name) == entry["output_hashes"].get(name)
                for name in STAGE_OUTPUTS[stage]
            )
            if (
                entry["input_hashes"] == input_hashes
                and entry["config_hash"] == config_hash
                and outputs_ok
            ):
                cached = dict(entry)
                cached["cache_hit"] = True
                return cached
            break

    outdir.mkdir(parents=True, exist_ok=True)
    started = time.monotonic()
    _STAGE_FUNCS[stage](config, workdir, outdir)
    elapsed = time.monotonic() - started

    output_hashes = {name: _hash_file(outdir / name) for name in STAGE_OUTPUTS[stage]}
    entry = {
        "stage": stage,
        "input_hashes": input_hashes,
        "config_hash": config_hash,
        "output_hashes": output_hashes,
        "wall_time": round(elapsed, 3),
        "cache_hit": False,
    }
    with open(workdir / "manifest.jsonl", "a", encoding="utf-8") as handle:
        handle.write(json.dumps(entry, sort_keys=True) + "\n")
    return entry


def run_all(config: PipelineConfig, workdir: str | Path, force: bool = False) -> list[dict]:
    return [run_stage(stage, config, workdir, force) for stage in STAGE_ORDER]
