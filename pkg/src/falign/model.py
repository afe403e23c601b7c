"""Core immutable data types: attributions, feature catalogs, configuration, metric results.

Everything here is hashable/frozen and safe to share between workers; all
operations are pure functions.
"""

from __future__ import annotations

import math
import re
import unicodedata
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import NamedTuple

from .errors import ConfigError, EmptyFeatureName, InvalidK

METRICS = ("FAP", "FAR", "FAF1")
LEVELS = ("instance", "class", "dataset")

CATALOG_VERSION = 1

_WS_RUN = re.compile(r"\s+")


@dataclass(frozen=True)
class FeatureName:
    """A feature identifier: the spelling as seen in the input plus its canonical form.

    Feature identity is the canonical name. Catalogs and explanation exports
    come from different tools with cosmetic differences (leading spaces are
    common in CICIDS2017 column headers), so all comparisons go through
    ``canonical``.
    """

    raw: str
    canonical: str


@lru_cache(maxsize=None)
def canonicalize(raw: str) -> FeatureName:
    """Canonicalize a feature name: NFC-normalize, trim, collapse whitespace runs, lowercase.

    Idempotent: canonicalizing a canonical name returns it unchanged.
    Raises EmptyFeatureName if nothing remains after trimming.
    """
    text = unicodedata.normalize("NFC", raw)
    text = _WS_RUN.sub(" ", text.strip()).lower()
    if not text:
        raise EmptyFeatureName(f"feature name is empty or all-whitespace: {raw!r}")
    return FeatureName(raw=raw, canonical=text)


class RankingRule(str, Enum):
    """How scored attributions are ordered into a ranking."""

    ABSOLUTE = "absolute"
    SIGNED = "signed"
    POSITIVE_ONLY = "positive_only"


class ScopingRule(str, Enum):
    """Which test instances count toward a class's evaluation scope."""

    CORRECT_ONLY = "correct_only"
    TRUE_CLASS_ALL = "true_class_all"


class EmptySetPolicy(str, Enum):
    """How classes with an empty domain feature set enter dataset-level aggregation."""

    EXCLUDE = "exclude_from_dataset"
    INCLUDE_AS_ZERO = "include_as_zero"


class AttributionEntry(NamedTuple):
    feature: FeatureName
    score: float | None


@dataclass(frozen=True)
class RankedAttribution:
    """One instance's explanation: an ordered list of (feature, score) pairs.

    ``entries`` preserve input order;  use :func:`ranked_entries` / :func:`top_k`
    to obtain the order under a ranking rule.  ``pre_ranked`` marks records that
    arrived as a bare ranked feature list with no scores; for those the stored
    order *is* the ranking and ranking rules do not apply.
    """

    instance_id: str
    true_class: str
    predicted_class: str | None
    entries: tuple[AttributionEntry, ...]
    pre_ranked: bool = False

    def __post_init__(self) -> None:
        entries = self.entries
        if not entries:
            raise ValueError(f"instance {self.instance_id!r}: attribution has no entries")
        names = [en.feature.canonical for en in entries]
        if len(set(names)) != len(names):
            seen: set[str] = set()
            for name in names:
                if name in seen:
                    raise ValueError(
                        f"instance {self.instance_id!r}: duplicate canonical feature {name!r}"
                    )
                seen.add(name)
        if self.pre_ranked:
            if any(en.score is not None for en in entries):
                raise ValueError(
                    f"instance {self.instance_id!r}: pre-ranked entries cannot carry scores"
                )
            return
        try:
            finite = all(map(math.isfinite, (en.score for en in entries)))
        except TypeError:
            finite = False
        if not finite:
            bad = next(
                en for en in entries if en.score is None or not math.isfinite(en.score)
            )
            raise ValueError(
                f"instance {self.instance_id!r}: feature {bad.feature.canonical!r} has "
                f"non-finite or missing score {bad.score!r}"
            )

    @property
    def n_features(self) -> int:
        return len(self.entries)


def ranked_entries(
    attribution: RankedAttribution, rule: RankingRule
) -> tuple[AttributionEntry, ...]:
    """Entries ordered under ``rule``; ties broken by ascending canonical name.

    absolute: descending |score|;  signed: descending score;  positive_only:
    descending score over entries with score > 0 (may be shorter than the
    input).  Pre-ranked attributions are returned in stored order regardless
    of rule.
    """
    if attribution.pre_ranked:
        return attribution.entries
    entries = attribution.entries
    if rule is RankingRule.ABSOLUTE:
        keys = [abs(en.score) for en in entries]
    elif rule is RankingRule.SIGNED:
        keys = [en.score for en in entries]
    elif rule is RankingRule.POSITIVE_ONLY:
        entries = tuple(en for en in entries if en.score > 0)
        keys = [en.score for en in entries]
    else:  # pragma: no cover - enum is closed
        raise ValueError(f"unknown ranking rule {rule!r}")
    if len(set(keys)) == len(keys):
        # no ties: a plain reverse argsort on the score key suffices
        order = sorted(range(len(entries)), key=keys.__getitem__, reverse=True)
        return tuple(entries[i] for i in order)
    decorated = sorted(
        zip(keys, entries), key=lambda pair: (-pair[0], pair[1].feature.canonical)
    )
    return tuple(en for _, en in decorated)


def top_k(
    attribution: RankedAttribution, k: int, rule: RankingRule = RankingRule.ABSOLUTE
) -> tuple[FeatureName, ...]:
    """The first min(k, n) features of the ranking under ``rule``.

    Deterministic: equal inputs give identical output across runs.  For any
    k <= k' the result is a prefix of top_k(..., k').
    """
    if k < 1:
        raise InvalidK(f"k must be >= 1, got {k}")
    return tuple(en.feature for en in ranked_entries(attribution, rule)[:k])


@dataclass(frozen=True)
class DomainFeatureSet:
    """The domain-informed features an analyst expects an attack class to surface.

    ``features`` may be empty: such classes are structurally unable to score
    recall and are flagged rather than rejected.  ``attack_refs`` is opaque
    provenance metadata (e.g. ATT&CK technique ids) and never affects
    computation.
    """

    class_name: str
    features: frozenset[FeatureName]
    aliases: tuple[str, ...] = ()
    attack_refs: tuple[str, ...] = ()
    canonical_features: frozenset[str] = field(init=False, compare=False, repr=False)

    def __post_init__(self) -> None:
        canon = frozenset(f.canonical for f in self.features)
        if len(canon) != len(self.features):
            raise ValueError(f"class {self.class_name!r}: duplicate canonical feature names")
        object.__setattr__(self, "canonical_features", canon)

    @property
    def size(self) -> int:
        return len(self.features)


@dataclass(frozen=True)
class DomainFeatureCatalog:
    """All per-class domain feature sets, keyed by canonical class name or alias."""

    classes: tuple[DomainFeatureSet, ...]
    version: int = CATALOG_VERSION

    def __post_init__(self) -> None:
        if self.version != CATALOG_VERSION:
            raise ValueError(f"unsupported catalog version {self.version}")
        seen: set[str] = set()
        for cls in self.classes:
            for label in (cls.class_name, *cls.aliases):
                canon = canonicalize(label).canonical
                if canon in seen:
                    raise ValueError(f"class name or alias {label!r} is not unique")
                seen.add(canon)

    def resolve(self, label: str) -> DomainFeatureSet | None:
        """Look up a class by name or alias, case/whitespace-insensitively."""
        return self._lookup().get(canonicalize(label).canonical)

    def _lookup(self) -> dict[str, DomainFeatureSet]:
        table = getattr(self, "_lookup_table", None)
        if table is None:
            table = {}
            for cls in self.classes:
                for label in (cls.class_name, *cls.aliases):
                    table[canonicalize(label).canonical] = cls
            object.__setattr__(self, "_lookup_table", table)
        return table


@dataclass(frozen=True)
class Aggregation:
    """A class/dataset aggregation strategy.

    ``alpha`` is only meaningful for the trimmed mean (fraction removed per
    tail, in [0, 0.5)).  ``weighted`` weights class values by instance support
    and is identical to ``mean`` at class level.
    """

    kind: str
    alpha: float = 0.0

    KINDS = ("mean", "median", "trimmed", "weighted")

    def __post_init__(self) -> None:
        if self.kind not in self.KINDS:
            raise ConfigError(f"unknown aggregation {self.kind!r}")
        if self.kind == "trimmed":
            if not (0.0 <= self.alpha < 0.5):
                raise ConfigError(f"trimmed alpha must be in [0, 0.5), got {self.alpha}")
        elif self.alpha:
            raise ConfigError(f"alpha is only valid for trimmed aggregation")

    @classmethod
    def mean(cls) -> "Aggregation":
        return cls("mean")

    @classmethod
    def median(cls) -> "Aggregation":
        return cls("median")

    @classmethod
    def trimmed(cls, alpha: float) -> "Aggregation":
        return cls("trimmed", alpha)

    @classmethod
    def weighted(cls) -> "Aggregation":
        return cls("weighted")

    @classmethod
    def parse(cls, text: str) -> "Aggregation":
        """Parse a CLI spelling: ``mean``, ``median``, ``weighted`` or ``trimmed:ALPHA``."""
        if text.startswith("trimmed:"):
            try:
                alpha = float(text.split(":", 1)[1])
            except ValueError as exc:
                raise ConfigError(f"bad trimmed alpha in {text!r}") from exc
            return cls.trimmed(alpha)
        return cls(text)

    def describe(self) -> str:
        return f"trimmed:{self.alpha}" if self.kind == "trimmed" else self.kind


@dataclass(frozen=True)
class EvaluationConfig:
    """Every knob of an evaluation run, with defaults for the common case."""

    ranking_rule: RankingRule = RankingRule.ABSOLUTE
    scoping_rule: ScopingRule = ScopingRule.CORRECT_ONLY
    k_values: tuple[int, ...] = (5, 10, 20, 40)
    aggregation: Aggregation = Aggregation.mean()
    empty_set_policy: EmptySetPolicy = EmptySetPolicy.EXCLUDE
    benign_labels: frozenset[str] = frozenset({"benign"})

    def __post_init__(self) -> None:
        validate_k_grid(self.k_values)
        canon = frozenset(canonicalize(b).canonical for b in self.benign_labels)
        object.__setattr__(self, "benign_labels", canon)

    def is_benign(self, label: str) -> bool:
        return canonicalize(label).canonical in self.benign_labels

    def to_dict(self) -> dict:
        """Effective config as plain data, for echoing into exports."""
        return {
            "ranking_rule": self.ranking_rule.value,
            "scoping_rule": self.scoping_rule.value,
            "k_values": list(self.k_values),
            "aggregation": self.aggregation.describe(),
            "empty_set_policy": self.empty_set_policy.value,
            "benign_labels": sorted(self.benign_labels),
        }


def validate_k_grid(k_values: tuple[int, ...] | list[int]) -> None:
    """k grids must be non-empty, strictly increasing and all >= 1."""
    if not k_values:
        raise InvalidK("k list is empty")
    prev = 0
    for k in k_values:
        if not isinstance(k, int) or k < 1:
            raise InvalidK(f"k must be a positive integer, got {k!r}")
        if k <= prev:
            raise InvalidK(f"k values must be strictly increasing, got {list(k_values)}")
        prev = k


@dataclass(frozen=True)
class MetricPoint:
    """One metric value at one (level, subject, k).

    ``support`` counts the instances aggregated into the value (1 at instance
    level).  ``flags`` records degenerate conditions such as EmptyDomainSet.
    """

    metric: str
    level: str
    subject: str
    k: int
    value: float
    support: int
    flags: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.metric not in METRICS:
            raise ValueError(f"unknown metric {self.metric!r}")
        if self.level not in LEVELS:
            raise ValueError(f"unknown level {self.level!r}")
        if self.k < 1:
            raise InvalidK(f"k must be >= 1, got {self.k}")
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"metric value {self.value!r} outside [0, 1]")
        if self.support < 1 and not self.flags:
            raise ValueError("support must be >= 1 unless the subject is flagged")


@dataclass(frozen=True)
class CurveSeries:
    """A metric-versus-k series for one subject, with optional k-cutoff markers."""

    metric: str
    level: str
    subject: str
    points: tuple[tuple[int, float], ...]
    markers: tuple[tuple[int, str], ...] = ()
    flags: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        ks = [k for k, _ in self.points]
        if any(b <= a for a, b in zip(ks, ks[1:])):
            raise ValueError("curve points must be sorted by k with one point per k")

    @property
    def k_values(self) -> tuple[int, ...]:
        return tuple(k for k, _ in self.points)

    @property
    def values(self) -> tuple[float, ...]:
        return tuple(v for _, v in self.points)


@dataclass(frozen=True)
class TradeoffSeries:
    """FAP-versus-FAR parameterized by k, for one subject.

    ``points`` are (k, far, fap) triples ordered by k; ``markers`` name the k
    cutoffs to highlight (typically the class's domain-set size).
    """

    subject: str
    points: tuple[tuple[int, float, float], ...]
    markers: tuple[tuple[int, str], ...] = ()
