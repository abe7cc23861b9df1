"""Monthly count series and additive seasonal decomposition.

The decomposition is the textbook moving-average one: a centered moving
average (half-weighted ends for an even window) gives the trend, the
month-of-year means of the detrended values (re-centered to sum to zero)
give the seasonal component, and the residual is what is left.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

log = logging.getLogger(__name__)

Period = tuple[int, int]


def _month_index(period: Period) -> int:
    return period[0] * 12 + (period[1] - 1)


def _from_month_index(index: int) -> Period:
    return (index // 12, index % 12 + 1)


@dataclass
class TimeSeries:
    """Contiguous monthly counts; months absent from the input are 0."""

    values: dict[Period, int] = field(default_factory=dict)

    @classmethod
    def from_counts(cls, counts: dict[Period, int]) -> "TimeSeries":
        if not counts:
            return cls({})
        start = min(_month_index(p) for p in counts)
        stop = max(_month_index(p) for p in counts)
        values = {}
        for index in range(start, stop + 1):
            period = _from_month_index(index)
            values[period] = counts.get(period, 0)
        return cls(values)

    def periods(self) -> list[Period]:
        return list(self.values)

    def __len__(self) -> int:
        return len(self.values)


def monthly_counts(assignments, topic_id: int, level: str = "document") -> TimeSeries:
    """Counts per month for one topic.

    level="document": distinct documents with at least one triple assigned to
    the topic (the default); level="triple": raw triple counts.
    """
    if level not in ("document", "triple"):
        raise ValueError(f"unknown counting level: {level}")
    seen_docs: dict[Period, set[str]] = {}
    counts: dict[Period, int] = {}
    for triple, topics in assignments:
        if topic_id not in topics:
            continue
        period = triple.date
        if level == "document":
            seen_docs.setdefault(period, set()).add(triple.doc_id)
        else:
            counts[period] = counts.get(period, 0) + 1
    if level == "document":
        counts = {period: len(docs) for period, docs in seen_docs.items()}
    return TimeSeries.from_counts(counts)


@dataclass
class Decomposition:
    trend: dict[Period, float]
    seasonal: dict[int, float]  # month-of-year (or phase index) -> component
    residual: dict[Period, float]
    observed: dict[Period, int]


def seasonal_decompose(series: TimeSeries, period: int = 12) -> Decomposition:
    """Additive trend/seasonal/residual split of a monthly count series.

    Requires at least two full cycles.  The trend is undefined on the
    half-window edges; on interior months trend + seasonal + residual
    reconstructs the observation exactly.
    """
    periods = series.periods()
    values = [series.values[p] for p in periods]
    n = len(values)
    if n < 2 * period:
        raise ValueError(
            f"series of length {n} is too short to decompose: need at least {2 * period}"
        )

    half = period // 2
    trend: dict[Period, float] = {}
    if period % 2 == 0:
        for i in range(half, n - half):
            window = 0.5 * values[i - half] + sum(values[i - half + 1 : i + half]) + 0.5 * values[i + half]
            trend[periods[i]] = window / period
    else:
        for i in range(half, n - half):
            trend[periods[i]] = sum(values[i - half : i + half + 1]) / period

    def phase(p: Period) -> int:
        return p[1] if period == 12 else _month_index(p) % period

    detrended: dict[int, list[float]] = {}
    for p, t in trend.items():
        detrended.setdefault(phase(p), []).append(series.values[p] - t)
    seasonal = {ph: sum(vals) / len(vals) for ph, vals in sorted(detrended.items())}
    mean = sum(seasonal.values()) / len(seasonal)
    seasonal = {ph: v - mean for ph, v in seasonal.items()}

    residual = {
        p: series.values[p] - trend[p] - seasonal[phase(p)] for p in trend
    }
    return Decomposition(
        trend=trend, seasonal=seasonal, residual=residual, observed=dict(series.values)
    )


def _trend_at(decomposition: Decomposition, endpoint: Period) -> float:
    """Trend value at the endpoint, clamped inward to the nearest month where
    the trend is defined."""
    if endpoint in decomposition.trend:
        return decomposition.trend[endpoint]
    target = _month_index(endpoint)
    nearest = min(
        decomposition.trend,
        key=lambda p: (abs(_month_index(p) - target), _month_index(p)),
    )
    return decomposition.trend[nearest]


def top_risers(
    term_series: dict[str, TimeSeries],
    from_period: Period,
    to_period: Period,
    k: int = 5,
    period: int = 12,
) -> list[tuple[str, float]]:
    """Terms ranked by trend increase between the endpoints, best first.
    Terms too short to decompose are skipped with a warning."""
    deltas = []
    for term, series in term_series.items():
        try:
            decomposition = seasonal_decompose(series, period)
        except ValueError as exc:
            log.warning("skipping term %r: %s", term, exc)
            continue
        deltas.append(
            (term, _trend_at(decomposition, to_period) - _trend_at(decomposition, from_period))
        )
    deltas.sort(key=lambda item: (-item[1], item[0]))
    return deltas[:k]
