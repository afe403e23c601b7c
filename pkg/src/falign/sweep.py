"""Drive metric computation across k values and assemble curve series.

One ranked pass per instance serves every k (see
:func:`falign.metrics.prefix_overlaps`), so sweeping k = 1..40 costs the
same as a single evaluation.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .errors import InvalidK, NoEvaluableClasses, SeriesMismatch
from .ingest import EvaluationScope
from .metrics import (
    FLAG_DEGENERATE_EXPLANATION,
    FLAG_EMPTY_DOMAIN_SET,
    class_level,
    dataset_level,
    fap_value,
    far_value,
    faf1_value,
    prefix_overlaps,
)
from .model import (
    CurveSeries,
    DomainFeatureCatalog,
    EvaluationConfig,
    METRICS,
    MetricPoint,
    RankedAttribution,
    TradeoffSeries,
    ranked_entries,
    validate_k_grid,
)

log = logging.getLogger(__name__)

ALL_LEVELS = ("instance", "class", "dataset")

_VALUE_FNS = {
    "FAP": lambda overlap, explained, expected: fap_value(overlap, explained),
    "FAR": lambda overlap, explained, expected: far_value(overlap, expected),
    "FAF1": faf1_value,
}


@dataclass(frozen=True)
class EvaluationPoints:
    """All MetricPoints produced by one evaluation run, grouped by level."""

    instance: tuple[MetricPoint, ...] = ()
    class_: tuple[MetricPoint, ...] = ()
    dataset: tuple[MetricPoint, ...] = ()

    def all_points(self) -> tuple[MetricPoint, ...]:
        return (*self.dataset, *self.class_, *self.instance)


def corpus_index(corpus: Iterable[RankedAttribution]) -> dict[str, RankedAttribution]:
    return {record.instance_id: record for record in corpus}


def compute_points(
    corpus: Mapping[str, RankedAttribution] | Iterable[RankedAttribution],
    catalog: DomainFeatureCatalog,
    scope: EvaluationScope,
    config: EvaluationConfig,
    k_grid: Sequence[int] | None = None,
    levels: Sequence[str] = ALL_LEVELS,
) -> EvaluationPoints:
    """Compute instance/class/dataset MetricPoints at every k in the grid.

    Iteration order is fixed (classes by name, instances by id, k ascending)
    and aggregation uses exactly-rounded sums, so output is identical across
    runs and worker counts.
    """
    by_id = corpus if isinstance(corpus, Mapping) else corpus_index(corpus)
    grid = tuple(k_grid) if k_grid is not None else config.k_values
    validate_k_grid(grid)
    want_instance = "instance" in levels
    want_class = "class" in levels or "dataset" in levels
    rule = config.ranking_rule

    instance_points: list[MetricPoint] = []
    class_points: list[MetricPoint] = []
    points_by_metric_k: dict[tuple[str, int], list[MetricPoint]] = {}

    for class_name, ids in scope.per_class.items():
        feature_set = catalog.resolve(class_name)
        assert feature_set is not None  # scope classes come from this catalog
        domain = feature_set.canonical_features
        expected = feature_set.size
        class_flags = (FLAG_EMPTY_DOMAIN_SET,) if expected == 0 else ()

        k_max = grid[-1]
        rows: list[list[int]] = []
        n_ranked: list[int] = []
        for instance_id in ids:
            ranked = ranked_entries(by_id[instance_id], rule)
            names = [en.feature.canonical for en in ranked[:k_max]]
            rows.append(prefix_overlaps(names, domain, grid))
            n_ranked.append(len(ranked))

        if want_instance:
            for instance_id, row, n in zip(ids, rows, n_ranked):
                for j, k in enumerate(grid):
                    explained = min(k, n)
                    flags = class_flags
                    if explained == 0:
                        flags = (FLAG_DEGENERATE_EXPLANATION, *class_flags)
                    for metric in METRICS:
                        instance_points.append(
                            MetricPoint(
                                metric=metric,
                                level="instance",
                                subject=instance_id,
                                k=k,
                                value=_VALUE_FNS[metric](row[j], explained, expected),
                                support=1,
                                flags=flags,
                            )
                        )

        if want_class:
            cols = list(zip(*rows))
            min_n = min(n_ranked)
            for j, k in enumerate(grid):
                col = cols[j]
                if k <= min_n:
                    # every instance has at least k ranked features: constant divisors
                    fap_vals = [o / k for o in col]
                    far_vals = [o / expected for o in col] if expected else [0.0] * len(col)
                    denom = k + expected
                    faf1_vals = [2 * o / denom for o in col]
                else:
                    explained = [k if k <= n else n for n in n_ranked]
                    fap_vals = [o / e if e else 0.0 for o, e in zip(col, explained)]
                    far_vals = [o / expected for o in col] if expected else [0.0] * len(col)
                    faf1_vals = [
                        2 * o / (e + expected) if e + expected else 0.0
                        for o, e in zip(col, explained)
                    ]
                for metric, values in (
                    ("FAP", fap_vals),
                    ("FAR", far_vals),
                    ("FAF1", faf1_vals),
                ):
                    point = class_level(
                        values,
                        config.aggregation,
                        metric=metric,
                        subject=class_name,
                        k=k,
                        flags=class_flags,
                    )
                    class_points.append(point)
                    points_by_metric_k.setdefault((metric, k), []).append(point)

    if want_class and not scope.per_class:
        raise NoEvaluableClasses("evaluation scope contains no instances")

    dataset_points: list[MetricPoint] = []
    if "dataset" in levels:
        for k in grid:
            for metric in METRICS:
                dataset_points.append(
                    dataset_level(
                        points_by_metric_k[(metric, k)],
                        config.aggregation,
                        config.empty_set_policy,
                    )
                )

    return EvaluationPoints(
        instance=tuple(instance_points),
        class_=tuple(class_points) if "class" in levels else (),
        dataset=tuple(dataset_points),
    )


def run_sweep(
    corpus: Mapping[str, RankedAttribution] | Iterable[RankedAttribution],
    catalog: DomainFeatureCatalog,
    scope: EvaluationScope,
    config: EvaluationConfig,
    k_range: tuple[int, int] = (1, 40),
) -> tuple[CurveSeries, ...]:
    """Class-level and dataset-level curve series over an inclusive k range.

    Class series carry a marker at the class's domain-set size when it falls
    inside the range.  Values at any k are identical to a single evaluation
    at that k.
    """
    lo, hi = k_range
    if lo < 1 or hi < lo:
        raise InvalidK(f"bad k range {lo}..{hi}")
    grid = tuple(range(lo, hi + 1))
    points = compute_points(corpus, catalog, scope, config, grid, levels=("class", "dataset"))

    series: list[CurveSeries] = []
    for metric in METRICS:
        by_subject: dict[str, list[MetricPoint]] = {}
        for point in points.class_:
            if point.metric == metric:
                by_subject.setdefault(point.subject, []).append(point)
        for subject in sorted(by_subject):
            subject_points = by_subject[subject]
            feature_set = catalog.resolve(subject)
            size = feature_set.size if feature_set else 0
            markers = ((size, f"k={size}"),) if lo <= size <= hi else ()
            series.append(
                CurveSeries(
                    metric=metric,
                    level="class",
                    subject=subject,
                    points=tuple((p.k, p.value) for p in subject_points),
                    markers=markers,
                    flags=subject_points[0].flags,
                )
            )
        dataset_points = [p for p in points.dataset if p.metric == metric]
        series.append(
            CurveSeries(
                metric=metric,
                level="dataset",
                subject="dataset",
                points=tuple((p.k, p.value) for p in dataset_points),
            )
        )
    return tuple(series)


def tradeoff_curve(
    fap_series: CurveSeries, far_series: CurveSeries, expected_count: int
) -> TradeoffSeries:
    """Pair FAP against FAR pointwise by k for one subject.

    A marker lands where k equals ``expected_count`` (the subject's
    domain-set size); if that k is outside the series a warning is logged
    and no marker is placed.
    """
    if fap_series.subject != far_series.subject:
        raise SeriesMismatch(
            f"subjects differ: {fap_series.subject!r} vs {far_series.subject!r}"
        )
    if fap_series.metric != "FAP" or far_series.metric != "FAR":
        raise SeriesMismatch("tradeoff_curve needs one FAP series and one FAR series")
    if fap_series.k_values != far_series.k_values:
        raise SeriesMismatch(
            f"k grids differ for {fap_series.subject!r}: "
            f"{fap_series.k_values} vs {far_series.k_values}"
        )
    points = tuple(
        (k, far, fap)
        for (k, fap), (_, far) in zip(fap_series.points, far_series.points)
    )
    if expected_count in fap_series.k_values:
        markers: tuple[tuple[int, str], ...] = ((expected_count, f"k={expected_count}"),)
    else:
        markers = ()
        log.warning(
            "subject %r: domain-set size %d outside the swept k range, no marker placed",
            fap_series.subject,
            expected_count,
        )
    return TradeoffSeries(subject=fap_series.subject, points=points, markers=markers)


def peak_faf1(series: CurveSeries) -> tuple[int, float]:
    """The smallest k attaining the series' maximum FAF1 value."""
    if series.metric != "FAF1":
        raise SeriesMismatch(f"peak_faf1 needs a FAF1 series, got {series.metric}")
    if not series.points:
        raise SeriesMismatch("peak_faf1 needs a non-empty series")
    best_k, best_v = series.points[0]
    for k, v in series.points[1:]:
        if v > best_v:
            best_k, best_v = k, v
    return best_k, best_v


def far_saturation(series: CurveSeries) -> int:
    """Smallest k at which a FAR series reaches its maximum (saturation cutoff)."""
    if series.metric != "FAR":
        raise SeriesMismatch(f"far_saturation needs a FAR series, got {series.metric}")
    if not series.points:
        raise SeriesMismatch("far_saturation needs a non-empty series")
    peak = max(series.values)
    for k, v in series.points:
        if v == peak:
            return k
    raise AssertionError("unreachable")  # pragma: no cover
