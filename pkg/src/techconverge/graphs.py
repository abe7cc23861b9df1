"""Weighted temporal topic graph and convergence analytics.

Nodes are topic clusters; an edge between two topics accumulates one count
per triple assigned to both, bucketed by (year, month).  On top of that:
Louvain communities, eigenvector centrality (power iteration), edge-trend
classification by late-occurrence share, per-period Jaccard similarity of
triple sets, and ranking of the fastest-rising topic pairs.
"""

from __future__ import annotations

import random
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from itertools import combinations

import networkx as nx

Period = tuple[int, int]
Pair = tuple[int, int]


@dataclass
class EdgeData:
    weight: int = 0
    per_period: Counter = field(default_factory=Counter)
    # (predicate, doc_id, period) kept before aggregation
    records: list = field(default_factory=list)


@dataclass
class TopicGraph:
    nodes: dict[int, dict] = field(default_factory=dict)
    edges: dict[Pair, EdgeData] = field(default_factory=dict)
    # per topic, per period: ids of assigned triples (for Jaccard series)
    topic_periods: dict[int, dict[Period, set[int]]] = field(default_factory=dict)

    def edge(self, a: int, b: int) -> EdgeData:
        if a == b:
            raise ValueError("self-loops are not allowed")
        return self.edges.setdefault((min(a, b), max(a, b)), EdgeData())

    @property
    def total_weight(self) -> int:
        return sum(e.weight for e in self.edges.values())

    def degrees(self) -> dict[int, float]:
        deg = {n: 0.0 for n in self.nodes}
        for (a, b), data in self.edges.items():
            deg[a] += data.weight
            deg[b] += data.weight
        return deg


def build_topic_graph(assignments) -> TopicGraph:
    """Aggregate (triple, topic-id set) pairs into the temporal topic graph.

    Each triple assigned to >= 2 topics adds one count per unordered topic
    pair in its month; every assigned topic's triple_count goes up by one.
    """
    graph = TopicGraph()
    for triple_id, (triple, topics) in enumerate(assignments):
        period = triple.date
        for topic in topics:
            node = graph.nodes.setdefault(topic, {"triple_count": 0})
            node["triple_count"] += 1
            graph.topic_periods.setdefault(topic, {}).setdefault(period, set()).add(
                triple_id
            )
        for a, b in combinations(sorted(topics), 2):
            data = graph.edge(a, b)
            data.weight += 1
            data.per_period[period] += 1
            data.records.append((triple.predicate, triple.doc_id, period))
    return graph


@dataclass
class Partition:
    assignment: dict[int, int]

    def communities(self) -> dict[int, list[int]]:
        grouped: dict[int, list[int]] = defaultdict(list)
        for node, community in self.assignment.items():
            grouped[community].append(node)
        return grouped


def singleton_partition(graph: TopicGraph) -> Partition:
    return Partition({node: i for i, node in enumerate(sorted(graph.nodes))})


def modularity(graph: TopicGraph, partition: Partition, resolution: float = 1.0) -> float:
    """Weighted modularity with resolution scaling."""
    m = graph.total_weight
    if m == 0:
        raise ValueError("modularity undefined on a graph with zero total weight")
    missing = graph.nodes.keys() - partition.assignment.keys()
    if missing:
        raise ValueError(f"partition does not cover nodes: {sorted(missing)[:5]}")
    degrees = graph.degrees()
    intra: Counter = Counter()
    for (a, b), data in graph.edges.items():
        if partition.assignment[a] == partition.assignment[b]:
            intra[partition.assignment[a]] += data.weight
    degree_sum: defaultdict[int, float] = defaultdict(float)
    for node, degree in degrees.items():
        degree_sum[partition.assignment[node]] += degree
    q = 0.0
    for community in set(partition.assignment.values()):
        q += intra[community] / m - resolution * (degree_sum[community] / (2 * m)) ** 2
    return q


def _to_networkx(graph: TopicGraph) -> nx.Graph:
    g = nx.Graph()
    g.add_nodes_from(sorted(graph.nodes))
    for (a, b), data in sorted(graph.edges.items()):
        g.add_edge(a, b, weight=data.weight)
    return g


def louvain(graph: TopicGraph, resolution: float = 0.85, seed: int = 0) -> Partition:
    """Seeded Louvain communities; community ids are contiguous from 0,
    numbered by each community's smallest node id."""
    if not graph.nodes:
        raise ValueError("graph is empty")
    if graph.total_weight == 0:
        raise ValueError("modularity undefined on a graph with zero total weight")
    communities = nx.community.louvain_communities(
        _to_networkx(graph),
        weight="weight",
        resolution=resolution,
        seed=random.Random(seed).randint(0, 2**31 - 1),
    )
    ordered = sorted(communities, key=min)
    assignment = {}
    for community_id, members in enumerate(ordered):
        for node in members:
            assignment[node] = community_id
    return Partition(assignment)


def connected_components(graph: TopicGraph) -> list[set[int]]:
    adjacency: dict[int, set[int]] = {n: set() for n in graph.nodes}
    for a, b in graph.edges:
        adjacency[a].add(b)
        adjacency[b].add(a)
    seen: set[int] = set()
    components = []
    for start in sorted(graph.nodes):
        if start in seen:
            continue
        stack = [start]
        component = set()
        while stack:
            node = stack.pop()
            if node in component:
                continue
            component.add(node)
            stack.extend(adjacency[node] - component)
        seen |= component
        components.append(component)
    return components


class ConvergenceError(Exception):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


def eigenvector_centrality(
    graph: TopicGraph, tol: float = 1e-9, max_iter: int = 1000
) -> dict[int, float]:
    """Power iteration on the largest component's weighted adjacency matrix,
    normalized so the maximum value is 1.  Nodes outside that component
    (including isolated nodes) get 0.

    Iterates with (A + I) so bipartite structures cannot oscillate.
    """
    components = sorted(connected_components(graph), key=lambda c: (-len(c), min(c)))
    if not components:
        return {}
    main = sorted(components[0])
    centrality = {node: 0.0 for node in graph.nodes}
    if len(main) == 1:
        centrality[main[0]] = 1.0
        return centrality
    adjacency: dict[int, list[tuple[int, float]]] = {n: [] for n in main}
    for (a, b), data in graph.edges.items():
        if a in adjacency and b in adjacency:
            adjacency[a].append((b, float(data.weight)))
            adjacency[b].append((a, float(data.weight)))
    x = {node: 1.0 for node in main}
    residual = float("inf")
    for _ in range(max_iter):
        new = {}
        for node in main:
            new[node] = x[node] + sum(x[other] * w for other, w in adjacency[node])
        top = max(new.values())
        new = {node: value / top for node, value in new.items()}
        residual = max(abs(new[node] - x[node]) for node in main)
        x = new
        if residual < tol:
            centrality.update(x)
            return centrality
    raise ConvergenceError(f"no convergence after {max_iter} iterations", residual)


@dataclass(frozen=True)
class EdgeTrend:
    label: str  # "emerging", "waning" or "persistent"
    late_share: float


def classify_edge_trend(
    edge: EdgeData, split: Period = (2022, 1), share: float = 0.7
) -> EdgeTrend:
    """Label an edge by the share of its occurrences at or after the split
    date: mostly-late is emerging, mostly-early is waning, else persistent."""
    if edge.weight <= 0:
        raise ValueError("edge weight must be positive")
    late = sum(count for period, count in edge.per_period.items() if period >= split)
    late_share = late / edge.weight
    if late_share > share:
        label = "emerging"
    elif 1.0 - late_share > share:
        label = "waning"
    else:
        label = "persistent"
    return EdgeTrend(label=label, late_share=late_share)


def jaccard_timeseries(
    a_sets: dict[Period, set[int]], b_sets: dict[Period, set[int]]
) -> dict[Period, float]:
    """Per-period Jaccard similarity of the two topics' triple-id sets."""
    series = {}
    for period in sorted(a_sets.keys() | b_sets.keys()):
        a = a_sets.get(period, set())
        b = b_sets.get(period, set())
        union = a | b
        series[period] = len(a & b) / len(union) if union else 0.0
    return series


def _month_index(period: Period) -> int:
    return period[0] * 12 + (period[1] - 1)


def _smoothed(series: dict[Period, float], endpoint: Period) -> float:
    """Mean of the up-to-3 series values centered on the endpoint month."""
    center = _month_index(endpoint)
    values = [v for p, v in series.items() if abs(_month_index(p) - center) <= 1]
    if not values:
        raise ValueError(f"no series values near endpoint {endpoint}")
    return sum(values) / len(values)


def top_convergences(
    series: dict[Pair, dict[Period, float]],
    from_period: Period,
    to_period: Period,
    k: int = 10,
) -> list[tuple[Pair, float]]:
    """Topic pairs with the largest Jaccard increase between the (smoothed)
    endpoints, best first."""
    deltas = []
    for pair, values in series.items():
        deltas.append((pair, _smoothed(values, to_period) - _smoothed(values, from_period)))
    deltas.sort(key=lambda item: (-item[1], item[0]))
    return deltas[:k]


# --- exports -----------------------------------------------------------------


def _xml_escape(text: str) -> str:
    return (
        text.replace("&", "&amp;")
        .replace("<", "&lt;")
        .replace(">", "&gt;")
        .replace('"', "&quot;")
    )


def write_gexf(
    graph: TopicGraph,
    path,
    names: dict[int, str] | None = None,
    partition: Partition | None = None,
    centrality: dict[int, float] | None = None,
    trends: dict[Pair, EdgeTrend] | None = None,
) -> None:
    """Deterministic GEXF export with triple_count / centrality / community
    node attributes and weight / trend edge attributes."""
    names = names or {}
    centrality = centrality or {}
    trends = trends or {}
    assignment = partition.assignment if partition else {}
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        '<gexf xmlns="http://gexf.net/1.3" version="1.3">',
        '  <graph defaultedgetype="undirected" mode="static">',
        '    <attributes class="node">',
        '      <attribute id="0" title="triple_count" type="integer"/>',
        '      <attribute id="1" title="centrality" type="double"/>',
        '      <attribute id="2" title="community" type="integer"/>',
        "    </attributes>",
        '    <attributes class="edge">',
        '      <attribute id="3" title="trend" type="string"/>',
        "    </attributes>",
        "    <nodes>",
    ]
    for node in sorted(graph.nodes):
        label = _xml_escape(names.get(node, str(node)))
        lines.append(f'      <node id="{node}" label="{label}">')
        lines.append("        <attvalues>")
        lines.append(
            f'          <attvalue for="0" value="{graph.nodes[node]["triple_count"]}"/>'
        )
        lines.append(
            f'          <attvalue for="1" value="{centrality.get(node, 0.0):.9f}"/>'
        )
        lines.append(f'          <attvalue for="2" value="{assignment.get(node, 0)}"/>')
        lines.append("        </attvalues>")
        lines.append("      </node>")
    lines.append("    </nodes>")
    lines.append("    <edges>")
    for edge_id, (a, b) in enumerate(sorted(graph.edges)):
        data = graph.edges[(a, b)]
        trend = trends.get((a, b))
        lines.append(
            f'      <edge id="{edge_id}" source="{a}" target="{b}" weight="{data.weight}">'
        )
        lines.append("        <attvalues>")
        label = trend.label if trend else "persistent"
        lines.append(f'          <attvalue for="3" value="{label}"/>')
        lines.append("        </attvalues>")
        lines.append("      </edge>")
    lines.append("    </edges>")
    lines.append("  </graph>")
    lines.append("</gexf>")
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("\n".join(lines) + "\n")


def write_dot(
    graph: TopicGraph,
    path,
    names: dict[int, str] | None = None,
    trends: dict[Pair, EdgeTrend] | None = None,
) -> None:
    names = names or {}
    trends = trends or {}
    colors = {"emerging": "red", "waning": "blue", "persistent": "black"}
    lines = ["graph topics {"]
    for node in sorted(graph.nodes):
        label = names.get(node, str(node)).replace('"', "'")
        count = graph.nodes[node]["triple_count"]
        lines.append(f'  n{node} [label="{label}" triple_count={count}];')
    for (a, b) in sorted(graph.edges):
        data = graph.edges[(a, b)]
        trend = trends.get((a, b))
        color = colors[trend.label] if trend else "black"
        lines.append(f'  n{a} -- n{b} [weight={data.weight} color={color}];')
    lines.append("}")
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("\n".join(lines) + "\n")
