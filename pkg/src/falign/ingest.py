"""Parse and validate explanation exports and feature catalogs; build the evaluation scope.

Explanation interchange format: UTF-8 JSON lines, one record per line:

    {"id": "...", "true_class": "...", "predicted_class": "...",
     "attributions": [{"feature": "...", "value": 0.12}, ...]}

Records may carry ``"ranked_features": ["...", ...]`` instead of
``attributions`` when the producing tool exports only an ordered list;
such records are accepted but flagged (ranking rules cannot apply).

Catalog format: one UTF-8 JSON document:

    {"version": 1, "classes": [{"name": "...", "aliases": [...],
     "attack_refs": [...], "features": [...]}]}
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, AbstractSet, Iterable, Iterator, Mapping

from .errors import EmptyFeatureName, EmptyInput
from .model import (
    AttributionEntry,
    CATALOG_VERSION,
    DomainFeatureCatalog,
    DomainFeatureSet,
    EvaluationConfig,
    RankedAttribution,
    ScopingRule,
    canonicalize,
)

# stat keys every report carries
STAT_KEYS = (
    "instances",
    "classes",
    "features",
    "catalog_classes",
    "catalog_features",
    "unmatched_catalog_features",
    "empty_domain_classes",
    "pre_ranked_records",
    "records_missing_prediction",
)


@dataclass(frozen=True)
class ValidationIssue:
    code: str
    subject: str
    message: str

    def render(self) -> str:
        return f"[{self.code}] {self.subject}: {self.message}"


@dataclass
class ValidationReport:
    """Errors block evaluation; warnings never do. Warnings sort by subject."""

    errors: list[ValidationIssue] = field(default_factory=list)
    warnings: list[ValidationIssue] = field(default_factory=list)
    stats: dict[str, int] = field(default_factory=dict)

    def error(self, code: str, subject: str, message: str) -> None:
        self.errors.append(ValidationIssue(code, subject, message))

    def warn(self, code: str, subject: str, message: str) -> None:
        self.warnings.append(ValidationIssue(code, subject, message))

    @property
    def ok(self) -> bool:
        return not self.errors

    def finalize(self) -> "ValidationReport":
        self.warnings.sort(key=lambda w: (w.subject, w.code, w.message))
        for key in STAT_KEYS:
            self.stats.setdefault(key, 0)
        return self

    def merged(self, other: "ValidationReport") -> "ValidationReport":
        out = ValidationReport(
            errors=[*self.errors, *other.errors],
            warnings=[*self.warnings, *other.warnings],
            stats=dict(self.stats),
        )
        for key, count in other.stats.items():
            out.stats[key] = max(out.stats.get(key, 0), count)
        return out.finalize()

    def to_dict(self) -> dict:
        return {
            "errors": [vars(e) for e in self.errors],
            "warnings": [vars(w) for w in self.warnings],
            "stats": dict(sorted(self.stats.items())),
        }


def _iter_text_lines(source: IO[bytes] | IO[str] | str | Path) -> Iterator[str]:
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as handle:
            yield from handle
        return
    for line in source:
        yield line.decode("utf-8") if isinstance(line, bytes) else line


def load_explanations(
    source: IO[bytes] | IO[str] | str | Path,
) -> tuple[tuple[RankedAttribution, ...], ValidationReport]:
    """Parse an interchange JSONL stream into attributions plus a validation report.

    All malformed lines are reported (with line numbers) rather than aborting
    on the first; any error blocks downstream evaluation.
    """
    report = ValidationReport()
    records: list[RankedAttribution] = []
    seen_ids: set[str] = set()
    classes: set[str] = set()
    features: set[str] = set()
    pre_ranked = 0
    missing_prediction: list[str] = []
    n_lines = 0

    for lineno, line in enumerate(_iter_text_lines(source), start=1):
        n_lines += 1
        if not line.strip():
            continue
        where = f"line {lineno}"
        try:
            payload = json.loads(line)
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            report.error("ParseError", where, str(exc))
            continue
        if not isinstance(payload, dict):
            report.error("ParseError", where, "record is not a JSON object")
            continue
        record = _parse_record(payload, where, report)
        if record is None:
            continue
        if record.instance_id in seen_ids:
            report.error(
                "DuplicateInstance", where, f"instance id {record.instance_id!r} already seen"
            )
            continue
        seen_ids.add(record.instance_id)
        records.append(record)
        classes.add(canonicalize(record.true_class).canonical)
        features.update(en.feature.canonical for en in record.entries)
        if record.pre_ranked:
            pre_ranked += 1
        if record.predicted_class is None:
            missing_prediction.append(record.instance_id)

    if n_lines == 0 or (not records and not report.errors):
        raise EmptyInput("explanation stream is empty")

    if pre_ranked:
        report.warn(
            "PreRanked",
            "corpus",
            f"{pre_ranked} record(s) carry a pre-ranked feature list; "
            "ranking rules do not apply to them",
        )
    if missing_prediction:
        sample = ", ".join(sorted(missing_prediction)[:3])
        report.warn(
            "MissingPrediction",
            "corpus",
            f"{len(missing_prediction)} record(s) lack predicted_class "
            f"(e.g. {sample}); they cannot be scoped under correct_only",
        )
    report.stats.update(
        instances=len(records),
        classes=len(classes),
        features=len(features),
        pre_ranked_records=pre_ranked,
        records_missing_prediction=len(missing_prediction),
    )
    return tuple(records), report.finalize()


def _parse_record(
    payload: dict, where: str, report: ValidationReport
) -> RankedAttribution | None:
    instance_id = payload.get("id")
    if not isinstance(instance_id, str) or not instance_id:
        report.error("MissingId", where, "record has no usable 'id'")
        return None
    true_class = payload.get("true_class")
    if not isinstance(true_class, str) or not true_class.strip():
        report.error("MissingTrueClass", where, f"instance {instance_id!r} has no true_class")
        return None
    predicted = payload.get("predicted_class")
    if predicted is not None and (not isinstance(predicted, str) or not predicted.strip()):
        report.error(
            "BadPredictedClass", where, f"instance {instance_id!r} predicted_class unusable"
        )
        return None

    attributions = payload.get("attributions")
    ranked = payload.get("ranked_features")
    if attributions is not None and ranked is not None:
        report.error(
            "AmbiguousRecord",
            where,
            f"instance {instance_id!r} carries both attributions and ranked_features",
        )
        return None
    if attributions is None and ranked is None:
        report.error(
            "MissingAttributions",
            where,
            f"instance {instance_id!r} has neither attributions nor ranked_features",
        )
        return None

    entries: list[AttributionEntry] = []
    seen: set[str] = set()
    if attributions is not None:
        if not isinstance(attributions, list) or not attributions:
            report.error(
                "MissingAttributions", where, f"instance {instance_id!r} attributions empty"
            )
            return None
        for item in attributions:
            if not isinstance(item, dict) or "feature" not in item:
                report.error("ParseError", where, f"bad attribution entry {item!r}")
                return None
            raw_name = item["feature"]
            if "value" not in item:
                report.error(
                    "MissingScore",
                    where,
                    f"feature {raw_name!r} has no score and record is not pre-ranked",
                )
                return None
            value = item["value"]
            if not isinstance(value, (int, float)) or isinstance(value, bool) or not math.isfinite(value):
                report.error(
                    "NonFiniteScore", where, f"feature {raw_name!r} has unusable score {value!r}"
                )
                return None
            entry = _make_entry(raw_name, float(value), where, report, seen, instance_id)
            if entry is None:
                return None
            entries.append(entry)
        return RankedAttribution(
            instance_id=instance_id,
            true_class=true_class,
            predicted_class=predicted,
            entries=tuple(entries),
        )

    if not isinstance(ranked, list) or not ranked:
        report.error("MissingAttributions", where, f"instance {instance_id!r} ranked list empty")
        return None
    for raw_name in ranked:
        entry = _make_entry(raw_name, None, where, report, seen, instance_id)
        if entry is None:
            return None
        entries.append(entry)
    return RankedAttribution(
        instance_id=instance_id,
        true_class=true_class,
        predicted_class=predicted,
        entries=tuple(entries),
        pre_ranked=True,
    )


def _make_entry(
    raw_name: object,
    score: float | None,
    where: str,
    report: ValidationReport,
    seen: set[str],
    instance_id: str,
) -> AttributionEntry | None:
    if not isinstance(raw_name, str):
        report.error("ParseError", where, f"feature name {raw_name!r} is not a string")
        return None
    try:
        feature = canonicalize(raw_name)
    except EmptyFeatureName:
        report.error("EmptyFeatureName", where, f"feature name {raw_name!r} is empty")
        return None
    if feature.canonical in seen:
        report.error(
            "DuplicateFeature",
            where,
            f"instance {instance_id!r}: {raw_name!r} duplicates canonical "
            f"name {feature.canonical!r}",
        )
        return None
    seen.add(feature.canonical)
    return AttributionEntry(feature, score)


def serialize_attribution(attribution: RankedAttribution) -> str:
    """One interchange JSONL line; reloading it reproduces the structure exactly."""
    payload: dict = {
        "id": attribution.instance_id,
        "true_class": attribution.true_class,
    }
    if attribution.predicted_class is not None:
        payload["predicted_class"] = attribution.predicted_class
    if attribution.pre_ranked:
        payload["ranked_features"] = [en.feature.raw for en in attribution.entries]
    else:
        payload["attributions"] = [
            {"feature": en.feature.raw, "value": en.score} for en in attribution.entries
        ]
    return json.dumps(payload, ensure_ascii=False, separators=(", ", ": "))


def serialize_catalog(catalog: DomainFeatureCatalog) -> str:
    """Catalog document as JSON text; load_catalog reproduces the structure."""
    payload = {
        "version": catalog.version,
        "classes": [
            {
                "name": cls.class_name,
                "aliases": list(cls.aliases),
                "attack_refs": list(cls.attack_refs),
                "features": sorted(f.raw for f in cls.features),
            }
            for cls in catalog.classes
        ],
    }
    return json.dumps(payload, indent=2, ensure_ascii=False) + "\n"


def load_catalog(
    source: IO[bytes] | IO[str] | str | Path,
) -> tuple[DomainFeatureCatalog | None, ValidationReport]:
    """Parse a catalog document. Returns (None, report) when structurally unusable."""
    report = ValidationReport()
    try:
        if isinstance(source, (str, Path)):
            text = Path(source).read_text(encoding="utf-8")
        else:
            data = source.read()
            text = data.decode("utf-8") if isinstance(data, bytes) else data
        payload = json.loads(text)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        report.error("ParseError", "catalog", str(exc))
        return None, report.finalize()

    if not isinstance(payload, dict):
        report.error("ParseError", "catalog", "document is not a JSON object")
        return None, report.finalize()
    version = payload.get("version")
    if version != CATALOG_VERSION:
        report.error(
            "UnsupportedVersion", "catalog", f"expected version {CATALOG_VERSION}, got {version!r}"
        )
        return None, report.finalize()
    raw_classes = payload.get("classes")
    if not isinstance(raw_classes, list) or not raw_classes:
        report.error("ParseError", "catalog", "document has no classes list")
        return None, report.finalize()

    classes: list[DomainFeatureSet] = []
    labels_seen: dict[str, str] = {}
    empty_classes = 0
    total_features = 0
    for idx, item in enumerate(raw_classes):
        where = f"classes[{idx}]"
        if not isinstance(item, dict) or not isinstance(item.get("name"), str):
            report.error("ParseError", where, "class entry has no usable name")
            continue
        name = item["name"]
        aliases = item.get("aliases", [])
        refs = item.get("attack_refs", [])
        raw_features = item.get("features", [])
        if not isinstance(aliases, list) or not isinstance(raw_features, list):
            report.error("ParseError", where, f"class {name!r}: aliases/features must be lists")
            continue

        usable = True
        for label in (name, *aliases):
            try:
                canon = canonicalize(label).canonical
            except (EmptyFeatureName, TypeError):
                report.error("ParseError", where, f"class {name!r}: bad label {label!r}")
                usable = False
                continue
            if canon in labels_seen:
                report.error(
                    "AliasCollision",
                    where,
                    f"{label!r} collides with class {labels_seen[canon]!r}",
                )
                usable = False
            else:
                labels_seen[canon] = name

        features: list = []
        feature_canon: set[str] = set()
        for raw_name in raw_features:
            try:
                feature = canonicalize(raw_name)
            except (EmptyFeatureName, TypeError):
                report.error("EmptyFeatureName", where, f"class {name!r}: bad feature {raw_name!r}")
                usable = False
                continue
            if feature.canonical in feature_canon:
                report.error(
                    "DuplicateFeature",
                    where,
                    f"class {name!r}: {raw_name!r} duplicates {feature.canonical!r}",
                )
                usable = False
                continue
            feature_canon.add(feature.canonical)
            features.append(feature)
        if not usable:
            continue
        if not features:
            empty_classes += 1
            report.warn(
                "EmptyDomainSet",
                name,
                "class has no domain-informed features; recall is structurally zero",
            )
        total_features += len(features)
        classes.append(
            DomainFeatureSet(
                class_name=name,
                features=frozenset(features),
                aliases=tuple(str(a) for a in aliases),
                attack_refs=tuple(str(r) for r in refs),
            )
        )

    report.stats.update(
        catalog_classes=len(classes),
        catalog_features=total_features,
        empty_domain_classes=empty_classes,
    )
    if not report.ok:
        return None, report.finalize()
    return DomainFeatureCatalog(classes=tuple(classes)), report.finalize()


# drop/exclusion reason codes used by build_scope
REASON_BENIGN = "Benign"
REASON_MISCLASSIFIED = "Misclassified"
REASON_UNMAPPED = "UnmappedClass"
REASON_NO_PREDICTION = "MissingPrediction"


@dataclass(frozen=True)
class DroppedInstance:
    instance_id: str
    reason: str


@dataclass(frozen=True)
class EvaluationScope:
    """The per-class instance partition the metrics run over.

    ``per_class`` maps catalog class names to id-sorted instance ids; benign
    instances and dropped instances (with reasons) are kept for accounting.
    Every input instance lands in exactly one of the three groups.
    """

    per_class: Mapping[str, tuple[str, ...]]
    benign: tuple[str, ...]
    dropped: tuple[DroppedInstance, ...]

    def scoped_count(self) -> int:
        return sum(len(ids) for ids in self.per_class.values())


def build_scope(
    explanations: Iterable[RankedAttribution],
    catalog: DomainFeatureCatalog,
    config: EvaluationConfig,
) -> EvaluationScope:
    """Partition instances into per-class scope, benign, and dropped groups.

    correct_only keeps instances whose predicted class equals their true
    class (label-level, case-insensitively); true_class_all keeps every
    attack-class instance grouped by true class.  Unmapped classes are
    dropped with a reason, never fatally.
    """
    per_class: dict[str, list[str]] = {}
    benign: list[str] = []
    dropped: list[DroppedInstance] = []

    for record in explanations:
        if config.is_benign(record.true_class):
            benign.append(record.instance_id)
            continue
        feature_set = catalog.resolve(record.true_class)
        if feature_set is None:
            dropped.append(DroppedInstance(record.instance_id, REASON_UNMAPPED))
            continue
        if config.scoping_rule is ScopingRule.CORRECT_ONLY:
            if record.predicted_class is None:
                dropped.append(DroppedInstance(record.instance_id, REASON_NO_PREDICTION))
                continue
            true_canon = canonicalize(record.true_class).canonical
            pred_canon = canonicalize(record.predicted_class).canonical
            if true_canon != pred_canon:
                dropped.append(DroppedInstance(record.instance_id, REASON_MISCLASSIFIED))
                continue
        per_class.setdefault(feature_set.class_name, []).append(record.instance_id)

    return EvaluationScope(
        per_class={name: tuple(sorted(ids)) for name, ids in sorted(per_class.items())},
        benign=tuple(sorted(benign)),
        dropped=tuple(sorted(dropped, key=lambda d: d.instance_id)),
    )


def scope_errors(
    explanations: Iterable[RankedAttribution],
    catalog: DomainFeatureCatalog,
    config: EvaluationConfig,
) -> ValidationReport:
    """Checks that depend on the configured scope, not the records alone.

    correct_only cannot be computed for records without predicted_class;
    those are hard errors here so an evaluation fails loudly instead of
    silently shrinking its scope.  Records whose class is not in the catalog
    are ignored (they are dropped regardless of prediction).
    """
    report = ValidationReport()
    if config.scoping_rule is ScopingRule.CORRECT_ONLY:
        missing = sorted(
            r.instance_id
            for r in explanations
            if r.predicted_class is None
            and not config.is_benign(r.true_class)
            and catalog.resolve(r.true_class) is not None
        )
        if missing:
            report.error(
                "MissingPrediction",
                "corpus",
                f"{len(missing)} record(s) lack predicted_class required by the "
                f"correct_only scope (e.g. {', '.join(missing[:3])})",
            )
    return report.finalize()


def cross_validate(
    explanations: Iterable[RankedAttribution],
    catalog: DomainFeatureCatalog,
    ignore_labels: AbstractSet[str] = frozenset(),
) -> ValidationReport:
    """Warn about catalog/corpus mismatches: features never attributed, unknown classes.

    Catalogs derived from knowledge bases regularly name features the chosen
    dataset does not expose, which silently caps recall; surfacing them is
    the point of this check.  ``ignore_labels`` (canonical) suppresses the
    unmapped-class warning, e.g. for benign labels.
    """
    report = ValidationReport()
    corpus_features: set[str] = set()
    corpus_classes: dict[str, str] = {}
    n_instances = 0
    for record in explanations:
        n_instances += 1
        corpus_features.update(en.feature.canonical for en in record.entries)
        corpus_classes.setdefault(canonicalize(record.true_class).canonical, record.true_class)

    unmatched = 0
    for cls in catalog.classes:
        for feature in sorted(cls.canonical_features):
            if feature not in corpus_features:
                unmatched += 1
                report.warn(
                    "UnmatchedCatalogFeature",
                    f"{cls.class_name}:{feature}",
                    "catalog feature never appears in any explanation",
                )

    for canon in sorted(corpus_classes):
        if canon in ignore_labels:
            continue
        if catalog.resolve(corpus_classes[canon]) is None:
            report.warn(
                "UnmappedClass",
                corpus_classes[canon],
                "explanation class has no catalog entry (by name or alias)",
            )

    report.stats.update(
        instances=n_instances,
        classes=len(corpus_classes),
        features=len(corpus_features),
        unmatched_catalog_features=unmatched,
    )
    return report.finalize()
