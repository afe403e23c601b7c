"""Synthetic explanation corpora and the brute-force metric oracle.

Generation is seeded and deterministic; there is no ambient randomness.
The oracle recomputes every metric from scratch (full sort, nested-scan
intersection) and deliberately shares no code with the metric kernels.
"""

from __future__ import annotations

import math
import random

import numpy as np

from .errors import InvalidSynthSpec
from .model import (
    AttributionEntry,
    DomainFeatureCatalog,
    DomainFeatureSet,
    RankedAttribution,
    RankingRule,
    canonicalize,
)

DEFAULT_CLASS = "synthetic"


def _feature_names(n_features: int) -> list:
    width = max(2, len(str(n_features - 1)))
    return [canonicalize(f"feat-{i:0{width}d}") for i in range(n_features)]


def _check(n_features: int, f_set_size: int) -> None:
    if n_features < 1:
        raise InvalidSynthSpec(f"n_features must be >= 1, got {n_features}")
    if not 0 <= f_set_size <= n_features:
        raise InvalidSynthSpec(
            f"f_set_size must be in [0, n_features], got {f_set_size} with n={n_features}"
        )


def gen_aligned(
    n_features: int,
    f_set_size: int,
    alignment: float,
    seed: int,
    class_name: str = DEFAULT_CLASS,
) -> tuple[RankedAttribution, DomainFeatureSet]:
    """One instance whose top ranks contain a controlled share of domain features.

    The top ceil(alignment * f_set_size) positions hold domain features,
    followed by every non-domain feature, with the remaining domain features
    last.  So at k = f_set_size, FAP is exactly ceil(alignment*|F|)/|F|
    (provided n_features >= 2*f_set_size for alignment 0).
    """
    _check(n_features, f_set_size)
    if not 0.0 <= alignment <= 1.0:
        raise InvalidSynthSpec(f"alignment must be in [0, 1], got {alignment}")
    rng = random.Random(seed)
    names = _feature_names(n_features)
    domain_idx = sorted(rng.sample(range(n_features), f_set_size))
    domain = set(domain_idx)
    rest = [i for i in range(n_features) if i not in domain]
    top = list(domain_idx)
    rng.shuffle(top)
    rng.shuffle(rest)
    n_top = math.ceil(alignment * f_set_size)
    order = top[:n_top] + rest + top[n_top:]

    entries = tuple(
        AttributionEntry(names[fi], float(n_features - rank))
        for rank, fi in enumerate(order)
    )
    attribution = RankedAttribution(
        instance_id=f"aligned-{seed}",
        true_class=class_name,
        predicted_class=class_name,
        entries=entries,
    )
    feature_set = DomainFeatureSet(
        class_name=class_name, features=frozenset(names[i] for i in domain_idx)
    )
    return attribution, feature_set


def gen_random(
    n_features: int,
    f_set_size: int,
    n_instances: int,
    seed: int,
    class_name: str = DEFAULT_CLASS,
) -> tuple[tuple[RankedAttribution, ...], DomainFeatureSet]:
    """Uniformly random rankings over a fixed domain set.

    For a random permutation the expected instance FAP at any k is
    f_set_size/n_features and the expected FAR at k is k/n_features
    (hypergeometric expectation), which makes these corpora a statistical
    baseline for alignment scores.
    """
    _check(n_features, f_set_size)
    if n_instances < 1:
        raise InvalidSynthSpec(f"n_instances must be >= 1, got {n_instances}")
    rng = np.random.default_rng(seed)
    names = _feature_names(n_features)
    domain_idx = np.sort(rng.choice(n_features, size=f_set_size, replace=False))
    perms = rng.permuted(
        np.tile(np.arange(n_features), (n_instances, 1)), axis=1
    ).tolist()

    # entries are shared across instances: one object per (feature, rank) pair
    scores = [float(n_features - rank) for rank in range(n_features)]
    cache = [
        [AttributionEntry(name, score) for score in scores] for name in names
    ]
    width = len(str(n_instances - 1))
    records = []
    for i, perm in enumerate(perms):
        entries = tuple(cache[fi][rank] for rank, fi in enumerate(perm))
        records.append(
            RankedAttribution(
                instance_id=f"rand-{i:0{width}d}",
                true_class=class_name,
                predicted_class=class_name,
                entries=entries,
            )
        )
    feature_set = DomainFeatureSet(
        class_name=class_name, features=frozenset(names[int(i)] for i in domain_idx)
    )
    return tuple(records), feature_set


def catalog_for(feature_set: DomainFeatureSet) -> DomainFeatureCatalog:
    """Wrap a single synthetic feature set as a one-class catalog."""
    return DomainFeatureCatalog(classes=(feature_set,))


def oracle_metrics(
    attribution: RankedAttribution,
    feature_set: DomainFeatureSet,
    k: int,
    rule: RankingRule = RankingRule.ABSOLUTE,
) -> tuple[float, float, float]:
    """(fap, far, faf1) recomputed the slow, obvious way.

    Full sort, materialized lists, quadratic nested-scan intersection, the
    three ratio formulas applied literally.  Kept independent of the metrics
    module so the two can check each other.
    """
    entries = list(attribution.entries)
    if not attribution.pre_ranked:
        if rule is RankingRule.POSITIVE_ONLY:
            entries = [en for en in entries if en.score > 0]
        if rule is RankingRule.ABSOLUTE:
            entries.sort(key=lambda en: (-abs(en.score), en.feature.canonical))
        else:
            entries.sort(key=lambda en: (-en.score, en.feature.canonical))
    top = [en.feature.canonical for en in entries[: max(k, 0)]]
    domain = [f.canonical for f in feature_set.features]

    overlap = 0
    for name in top:
        for want in domain:
            if name == want:
                overlap += 1
                break

    explained = len(top)
    expected = len(domain)
    fap = overlap / explained if explained else 0.0
    far = overlap / expected if expected else 0.0
    faf1 = 2 * overlap / (explained + expected) if explained + expected else 0.0
    return fap, far, faf1
