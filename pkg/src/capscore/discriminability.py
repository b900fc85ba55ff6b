"""Metric-discriminability protocol over a captioned corpus.

Every unordered caption pair gets a score; pairs within one item form the
"similar" bucket, cross-item pairs the "distinct" bucket, and cross-item
pairs whose items share no audio tag the "different" bucket. After per-metric
min-max normalization, the gap between the similar and different averages
says how well a metric separates same-content captions from unrelated ones.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Protocol, Sequence

from .errors import DegenerateRange, EmptyBucket, InsufficientCorpus
from .ingestion import CorpusItem
from .text import Caption

__all__ = [
    "CaptionRef",
    "PairKey",
    "PairMetric",
    "PairScoreMatrix",
    "DiscriminabilityReport",
    "caption_refs",
    "pairwise_scores",
    "normalize_scores",
    "aggregate",
    "rank_metrics",
]

PairKey = tuple[tuple[str, int], tuple[str, int]]


@dataclass(frozen=True)
class CaptionRef:
    """A caption addressed by its item id and position within the item."""

    item_id: str
    caption_index: int
    caption: Caption

    @property
    def key(self) -> tuple[str, int]:
        return (self.item_id, self.caption_index)


class PairMetric(Protocol):
    """A metric that can score one caption against another.

    orientation is "higher" when larger scores mean more similar, "lower"
    for distances. Asymmetric metrics are called in both directions and
    averaged; symmetric ones are called once. score_pair returns None when
    the pair cannot be scored (recorded as missing).
    """

    name: str
    orientation: str
    symmetric: bool

    def score_pair(self, x: CaptionRef, y: CaptionRef) -> float | None: ...


@dataclass
class PairScoreMatrix:
    """Scores for every unordered caption pair; None marks a missing score."""

    metric_name: str
    scores: dict[PairKey, float | None]

    def get(self, a: tuple[str, int], b: tuple[str, int]) -> float | None:
        return self.scores[_pair_key(a, b)]

    def finite_values(self) -> list[float]:
        return [s for s in self.scores.values() if s is not None]


def _pair_key(a: tuple[str, int], b: tuple[str, int]) -> PairKey:
    return (a, b) if a <= b else (b, a)


def caption_refs(corpus: Sequence[CorpusItem]) -> list[CaptionRef]:
    """All captions of the corpus in deterministic (item_id, index) order."""
    refs = [
        CaptionRef(item.item_id, idx, caption)
        for item in sorted(corpus, key=lambda it: it.item_id)
        for idx, caption in enumerate(item.captions)
    ]
    return refs


def pairwise_scores(
    corpus: Sequence[CorpusItem],
    metric: PairMetric,
    threads: int = 1,
) -> PairScoreMatrix:
    """Score every unordered caption pair in the corpus with one metric."""
    refs = caption_refs(corpus)
    if len(refs) < 2:
        raise InsufficientCorpus("pairwise scoring needs at least two captions")
    pairs = [(refs[i], refs[j]) for i in range(len(refs)) for j in range(i + 1, len(refs))]

    def score(pair: tuple[CaptionRef, CaptionRef]) -> float | None:
        x, y = pair
        forward = metric.score_pair(x, y)
        if metric.symmetric:
            return forward
        backward = metric.score_pair(y, x)
        if forward is None or backward is None:
            return None
        return 0.5 * (forward + backward)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            values = list(pool.map(score, pairs))
    else:
        values = [score(pair) for pair in pairs]
    scores = {_pair_key(x.key, y.key): value for (x, y), value in zip(pairs, values)}
    return PairScoreMatrix(metric_name=metric.name, scores=scores)


def normalize_scores(matrix: PairScoreMatrix, orientation: str = "higher") -> PairScoreMatrix:
    """Min-max normalize to [0, 1]; lower-better metrics are negated first.

    Raises DegenerateRange when fewer than two distinct finite values exist.
    """
    if orientation not in ("higher", "lower"):
        raise ValueError(f"orientation must be 'higher' or 'lower', got {orientation!r}")
    sign = 1.0 if orientation == "higher" else -1.0
    finite = [sign * v for v in matrix.finite_values()]
    if len(set(finite)) < 2:
        raise DegenerateRange(
            f"metric {matrix.metric_name!r} has no score spread; min-max undefined"
        )
    low, high = min(finite), max(finite)
    span = high - low
    normalized = {
        key: None if value is None else (sign * value - low) / span
        for key, value in matrix.scores.items()
    }
    return PairScoreMatrix(metric_name=matrix.metric_name, scores=normalized)


@dataclass
class DiscriminabilityReport:
    """Bucket averages for one metric plus the separation figure of merit."""

    metric_name: str
    avg_similar: float
    avg_distinct: float
    avg_different: float
    separation: float
    pair_counts: dict[str, int]
    missing_counts: dict[str, int]


def _bucket_of(corpus_tags: dict[str, frozenset[str]], key: PairKey) -> tuple[bool, bool]:
    (id_a, _), (id_b, _) = key
    same_item = id_a == id_b
    tag_disjoint = not same_item and not (corpus_tags[id_a] & corpus_tags[id_b])
    return same_item, tag_disjoint


def aggregate(matrix: PairScoreMatrix, corpus: Sequence[CorpusItem]) -> DiscriminabilityReport:
    """Bucket means over the pair matrix.

    Missing scores are excluded from the means but counted; a bucket with no
    finite scores raises EmptyBucket naming the bucket.
    """
    corpus_tags = {item.item_id: item.tags for item in corpus}
    sums = {"similar": 0.0, "distinct": 0.0, "different": 0.0}
    values: dict[str, list[float]] = {"similar": [], "distinct": [], "different": []}
    counts = {"similar": 0, "distinct": 0, "different": 0}
    missing = {"similar": 0, "distinct": 0, "different": 0}
    for key in sorted(matrix.scores):
        same_item, tag_disjoint = _bucket_of(corpus_tags, key)
        buckets = ["similar"] if same_item else (["distinct", "different"] if tag_disjoint else ["distinct"])
        value = matrix.scores[key]
        for bucket in buckets:
            counts[bucket] += 1
            if value is None:
                missing[bucket] += 1
            else:
                values[bucket].append(value)
    for bucket in ("similar", "distinct", "different"):
        if not values[bucket]:
            raise EmptyBucket(bucket)
        sums[bucket] = math.fsum(values[bucket]) / len(values[bucket])
    return DiscriminabilityReport(
        metric_name=matrix.metric_name,
        avg_similar=sums["similar"],
        avg_distinct=sums["distinct"],
        avg_different=sums["different"],
        separation=sums["similar"] - sums["different"],
        pair_counts=counts,
        missing_counts=missing,
    )


def rank_metrics(reports: Sequence[DiscriminabilityReport]) -> list[DiscriminabilityReport]:
    """Sort by separation, then similar-bucket average, then name."""
    return sorted(reports, key=lambda r: (-r.separation, -r.avg_similar, r.metric_name))
