"""Alignment metric kernels and aggregation.

The three instance metrics compare an explanation's top-k feature set E
against a class's domain-informed feature set F:

    precision (FAP) = |E ∩ F| / |E|
    recall    (FAR) = |E ∩ F| / |F|
    f1        (FAF1) = 2·|E ∩ F| / (|E| + |F|)

Degenerate denominators score 0 and are flagged, never raised: an empty
top-k (e.g. positive_only ranking over all-negative scores) flags
DegenerateExplanation, an empty domain set flags EmptyDomainSet.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass
from itertools import accumulate, islice
from typing import AbstractSet, Iterable, Sequence

from .errors import EmptyClass, NoEvaluableClasses
from .model import (
    Aggregation,
    DomainFeatureSet,
    EmptySetPolicy,
    MetricPoint,
    RankedAttribution,
    RankingRule,
    ranked_entries,
    validate_k_grid,
)

FLAG_DEGENERATE_EXPLANATION = "DegenerateExplanation"
FLAG_EMPTY_DOMAIN_SET = "EmptyDomainSet"


@dataclass(frozen=True)
class InstanceAlignment:
    """Overlap counts between one instance's top-k and its class's domain set.

    overlap = |E ∩ F|, explained = |E| (<= k), expected = |F|.
    """

    instance_id: str
    class_name: str
    k: int
    overlap: int
    explained: int
    expected: int

    def __post_init__(self) -> None:
        if self.explained > self.k:
            raise ValueError(f"explained {self.explained} exceeds k {self.k}")
        if not 0 <= self.overlap <= min(self.explained, self.expected):
            raise ValueError(
                f"overlap {self.overlap} outside [0, min({self.explained}, {self.expected})]"
            )

    @property
    def flags(self) -> tuple[str, ...]:
        out = []
        if self.explained == 0:
            out.append(FLAG_DEGENERATE_EXPLANATION)
        if self.expected == 0:
            out.append(FLAG_EMPTY_DOMAIN_SET)
        return tuple(out)


def fap_value(overlap: int, explained: int) -> float:
    return overlap / explained if explained else 0.0


def far_value(overlap: int, expected: int) -> float:
    return overlap / expected if expected else 0.0


def faf1_value(overlap: int, explained: int, expected: int) -> float:
    denom = explained + expected
    return 2.0 * overlap / denom if denom else 0.0


def fap_instance(a: InstanceAlignment) -> float:
    """Fraction of the explained top-k that is domain-relevant (correctness)."""
    return fap_value(a.overlap, a.explained)


def far_instance(a: InstanceAlignment) -> float:
    """Fraction of the domain set the top-k covers (completeness)."""
    return far_value(a.overlap, a.expected)


def faf1_instance(a: InstanceAlignment) -> float:
    """Harmonic-mean combination of precision and recall (the Dice coefficient)."""
    return faf1_value(a.overlap, a.explained, a.expected)


def prefix_overlaps(
    names: Iterable[str], domain: AbstractSet[str], k_grid: Sequence[int]
) -> list[int]:
    """Cumulative |prefix ∩ domain| at each requested k, in one pass.

    ``names`` is the ranked canonical-name sequence; for k beyond its length
    the last count carries over (the prefix is capped at n_features).
    """
    k_max = k_grid[-1]
    cum = list(accumulate(map(domain.__contains__, islice(names, k_max))))
    seen = len(cum)
    total = cum[-1] if cum else 0
    return [cum[k - 1] if k <= seen else total for k in k_grid]


def alignment_counts(
    attribution: RankedAttribution,
    feature_set: DomainFeatureSet,
    k_values: Sequence[int],
    rule: RankingRule = RankingRule.ABSOLUTE,
) -> tuple[InstanceAlignment, ...]:
    """InstanceAlignment at every requested k, computed in a single ranked pass.

    ``k_values`` must be strictly increasing.  Results are identical to
    computing each k independently.
    """
    validate_k_grid(tuple(k_values))
    ranked = ranked_entries(attribution, rule)
    n_ranked = len(ranked)
    overlaps = prefix_overlaps(
        (en.feature.canonical for en in ranked), feature_set.canonical_features, k_values
    )
    expected = feature_set.size
    return tuple(
        InstanceAlignment(
            instance_id=attribution.instance_id,
            class_name=feature_set.class_name,
            k=k,
            overlap=overlap,
            explained=min(k, n_ranked),
            expected=expected,
        )
        for k, overlap in zip(k_values, overlaps)
    )


def aggregate_values(values: Sequence[float], agg: Aggregation) -> float:
    """Reduce instance-level values per the aggregation strategy.

    Sums use math.fsum (exactly-rounded compensated summation), so results do
    not depend on accumulation order or worker count.
    """
    n = len(values)
    if n == 0:
        raise EmptyClass("no values to aggregate")
    if agg.kind in ("mean", "weighted"):  # weights apply across classes only
        return math.fsum(values) / n
    if agg.kind == "median":
        return float(statistics.median(values))
    # trimmed: drop floor(alpha*n) smallest and largest, mean the rest
    drop = math.floor(agg.alpha * n)
    kept = sorted(values)[drop : n - drop]
    return math.fsum(kept) / len(kept)


def class_level(
    values: Sequence[float],
    agg: Aggregation,
    *,
    metric: str,
    subject: str,
    k: int,
    flags: tuple[str, ...] = (),
) -> MetricPoint:
    """Aggregate instance-level values for one class into a MetricPoint."""
    if not values:
        raise EmptyClass(f"class {subject!r} has no scoped instances")
    return MetricPoint(
        metric=metric,
        level="class",
        subject=subject,
        k=k,
        value=aggregate_values(values, agg),
        support=len(values),
        flags=flags,
    )


def dataset_level(
    class_points: Sequence[MetricPoint],
    agg: Aggregation,
    policy: EmptySetPolicy = EmptySetPolicy.EXCLUDE,
) -> MetricPoint:
    """Aggregate class-level points into one dataset-level point.

    ``mean`` is the unweighted macro average over classes; ``weighted``
    weights class values by instance support.  Classes flagged
    EmptyDomainSet are excluded or included-as-zero per ``policy``.
    """
    if not class_points:
        raise NoEvaluableClasses("no class-level points supplied")
    metric = class_points[0].metric
    k = class_points[0].k
    for p in class_points:
        if p.level != "class" or p.metric != metric or p.k != k:
            raise ValueError("dataset_level requires class-level points sharing metric and k")
    if policy is EmptySetPolicy.EXCLUDE:
        kept = [p for p in class_points if FLAG_EMPTY_DOMAIN_SET not in p.flags]
    else:
        kept = list(class_points)
    if not kept:
        raise NoEvaluableClasses(
            f"no classes remain for dataset-level {metric} at k={k} "
            f"after empty-set policy {policy.value}"
        )
    support = sum(p.support for p in kept)
    if agg.kind == "weighted":
        value = math.fsum(p.value * p.support for p in kept) / support
    else:
        value = aggregate_values([p.value for p in kept], agg)
    return MetricPoint(
        metric=metric, level="dataset", subject="dataset", k=k, value=value, support=support
    )
