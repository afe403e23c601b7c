"""Builders shared across test modules."""

from __future__ import annotations

from falign.model import (
    AttributionEntry,
    DomainFeatureCatalog,
    DomainFeatureSet,
    RankedAttribution,
    canonicalize,
)


def attribution(
    pairs,
    instance_id="i1",
    true_class="attack",
    predicted_class="attack",
    pre_ranked=False,
):
    """RankedAttribution from [(name, score), ...] or [name, ...] when pre-ranked."""
    if pre_ranked:
        entries = tuple(AttributionEntry(canonicalize(n), None) for n in pairs)
    else:
        entries = tuple(AttributionEntry(canonicalize(n), float(s)) for n, s in pairs)
    return RankedAttribution(
        instance_id=instance_id,
        true_class=true_class,
        predicted_class=predicted_class,
        entries=entries,
        pre_ranked=pre_ranked,
    )


def ranked(names, **kwargs):
    """Attribution whose absolute-rule ranking equals the given name order."""
    n = len(names)
    return attribution([(name, float(n - i)) for i, name in enumerate(names)], **kwargs)


def feature_set(names, class_name="attack", aliases=(), attack_refs=()):
    return DomainFeatureSet(
        class_name=class_name,
        features=frozenset(canonicalize(n) for n in names),
        aliases=tuple(aliases),
        attack_refs=tuple(attack_refs),
    )


def catalog(*sets) -> DomainFeatureCatalog:
    return DomainFeatureCatalog(classes=tuple(sets))
