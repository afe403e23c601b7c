"""falign: feature-alignment evaluation for explainable IDS.

Quantifies how well top-k feature explanations align with domain-informed
feature catalogs via Feature Alignment Precision / Recall / F1 at instance,
class, and dataset level, with k-sweeps and trade-off curves.
"""

from .errors import (
    ConfigError,
    EmptyClass,
    EmptyFeatureName,
    EmptyInput,
    FalignError,
    IncompleteResults,
    InvalidK,
    InvalidSynthSpec,
    NoEvaluableClasses,
    SeriesMismatch,
    UnsupportedVersion,
)
from .ingest import (
    EvaluationScope,
    ValidationIssue,
    ValidationReport,
    build_scope,
    cross_validate,
    load_catalog,
    load_explanations,
    serialize_attribution,
    serialize_catalog,
)
from .metrics import (
    InstanceAlignment,
    alignment_counts,
    class_level,
    dataset_level,
    fap_instance,
    far_instance,
    faf1_instance,
)
from .model import (
    Aggregation,
    AttributionEntry,
    CurveSeries,
    DomainFeatureCatalog,
    DomainFeatureSet,
    EmptySetPolicy,
    EvaluationConfig,
    FeatureName,
    MetricPoint,
    RankedAttribution,
    RankingRule,
    ScopingRule,
    TradeoffSeries,
    canonicalize,
    top_k,
)
from .sweep import compute_points, corpus_index, peak_faf1, run_sweep, tradeoff_curve

__version__ = "0.1.0"

__all__ = [
    "Aggregation",
    "AttributionEntry",
    "ConfigError",
    "CurveSeries",
    "DomainFeatureCatalog",
    "DomainFeatureSet",
    "EmptyClass",
    "EmptyFeatureName",
    "EmptyInput",
    "EmptySetPolicy",
    "EvaluationConfig",
    "EvaluationScope",
    "FalignError",
    "FeatureName",
    "IncompleteResults",
    "InstanceAlignment",
    "InvalidK",
    "InvalidSynthSpec",
    "MetricPoint",
    "NoEvaluableClasses",
    "RankedAttribution",
    "RankingRule",
    "ScopingRule",
    "SeriesMismatch",
    "TradeoffSeries",
    "UnsupportedVersion",
    "ValidationIssue",
    "ValidationReport",
    "alignment_counts",
    "build_scope",
    "canonicalize",
    "class_level",
    "compute_points",
    "corpus_index",
    "cross_validate",
    "dataset_level",
    "fap_instance",
    "far_instance",
    "faf1_instance",
    "load_catalog",
    "load_explanations",
    "peak_faf1",
    "run_sweep",
    "serialize_attribution",
    "serialize_catalog",
    "top_k",
    "tradeoff_curve",
]
