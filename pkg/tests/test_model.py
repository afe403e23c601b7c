import pytest
from hypothesis import given, strategies as st

from falign.errors import ConfigError, EmptyFeatureName, InvalidK
from falign.model import (
    Aggregation,
    CurveSeries,
    DomainFeatureCatalog,
    EvaluationConfig,
    MetricPoint,
    RankingRule,
    canonicalize,
    ranked_entries,
    top_k,
)
from util import attribution, catalog, feature_set, ranked


class TestCanonicalize:
    def test_trims_and_lowercases(self):
        assert canonicalize(" Flow Duration").canonical == "flow duration"

    def test_idempotent_on_example(self):
        assert canonicalize("flow duration").canonical == "flow duration"

    def test_collapses_whitespace_runs(self):
        # four rules applied by hand: NFC, trim, collapse runs, lowercase
        assert canonicalize("Fwd  Packet\tLength  Max ").canonical == "fwd packet length max"

    def test_unicode_composition(self):
        composed = "café"
        decomposed = "café"
        assert canonicalize(composed).canonical == canonicalize(decomposed).canonical

    @pytest.mark.parametrize("raw", ["", "   ", "\t\n"])
    def test_empty_rejected(self, raw):
        with pytest.raises(EmptyFeatureName):
            canonicalize(raw)

    @given(st.text(min_size=1))
    def test_idempotent(self, raw):
        try:
            first = canonicalize(raw)
        except EmptyFeatureName:
            return
        assert canonicalize(first.canonical).canonical == first.canonical

    def test_raw_preserved(self):
        name = canonicalize(" SYN Flag Count")
        assert name.raw == " SYN Flag Count"


class TestTopK:
    def test_absolute_uses_magnitude(self):
        e = attribution([("a", -0.9), ("b", 0.5), ("c", 0.1)])
        assert [f.canonical for f in top_k(e, 2, RankingRule.ABSOLUTE)] == ["a", "b"]

    def test_positive_only_drops_negatives(self):
        e = attribution([("a", -0.9), ("b", 0.5), ("c", 0.1)])
        assert [f.canonical for f in top_k(e, 2, RankingRule.POSITIVE_ONLY)] == ["b", "c"]

    def test_positive_only_may_fall_short(self):
        e = attribution([("a", -0.9), ("b", -0.5)])
        assert top_k(e, 2, RankingRule.POSITIVE_ONLY) == ()

    def test_signed_orders_by_raw_score(self):
        e = attribution([("a", -0.9), ("b", 0.5), ("c", 0.1)])
        assert [f.canonical for f in top_k(e, 3, RankingRule.SIGNED)] == ["b", "c", "a"]

    def test_tie_broken_by_name(self):
        # verified against a naive full-sort oracle
        e = attribution([("b", 0.5), ("a", 0.5)])
        oracle = sorted(e.entries, key=lambda en: (-abs(en.score), en.feature.canonical))
        assert top_k(e, 1)[0].canonical == "a" == oracle[0].feature.canonical

    def test_k_capped_at_n_features(self):
        e = attribution([("a", 1.0)])
        assert len(top_k(e, 5)) == 1

    def test_invalid_k(self):
        with pytest.raises(InvalidK):
            top_k(attribution([("a", 1.0)]), 0)

    def test_pre_ranked_keeps_stored_order(self):
        e = attribution(["z", "m", "a"], pre_ranked=True)
        for rule in RankingRule:
            assert [f.canonical for f in top_k(e, 3, rule)] == ["z", "m", "a"]


scores = st.floats(min_value=-5, max_value=5, allow_nan=False, allow_subnormal=False)


@st.composite
def attributions(draw, max_features=12):
    n = draw(st.integers(min_value=1, max_value=max_features))
    vals = draw(st.lists(scores, min_size=n, max_size=n))
    return attribution([(f"f{i:02d}", v) for i, v in enumerate(vals)])


@given(e=attributions(), k=st.integers(1, 12), k2=st.integers(1, 12), rule=st.sampled_from(RankingRule))
def test_prefix_property(e, k, k2, rule):
    lo, hi = min(k, k2), max(k, k2)
    shorter = top_k(e, lo, rule)
    assert top_k(e, hi, rule)[: len(shorter)] == shorter


@given(e=attributions(), rule=st.sampled_from(RankingRule))
def test_ranking_deterministic_and_duplicate_free(e, rule):
    first = ranked_entries(e, rule)
    assert first == ranked_entries(e, rule)
    names = [en.feature.canonical for en in first]
    assert len(set(names)) == len(names)


class TestRankedAttribution:
    def test_duplicate_canonical_rejected(self):
        with pytest.raises(ValueError, match="duplicate"):
            attribution([("Flow Duration", 1.0), (" flow  duration", 0.5)])

    def test_empty_rejected(self):
        with pytest.raises(ValueError, match="no entries"):
            attribution([])

    def test_non_finite_score_rejected(self):
        with pytest.raises(ValueError, match="non-finite"):
            attribution([("a", float("nan"))])

    def test_n_features(self):
        assert ranked(["a", "b", "c"]).n_features == 3


class TestCatalog:
    def test_duplicate_canonical_feature_rejected(self):
        from falign.model import DomainFeatureSet

        with pytest.raises(ValueError, match="duplicate"):
            DomainFeatureSet(
                class_name="A",
                features=frozenset(
                    {canonicalize("Flow Duration"), canonicalize("flow  duration")}
                ),
            )

    def test_alias_resolution_is_case_insensitive(self):
        cat = catalog(feature_set(["x"], class_name="DDoS/DoS", aliases=("DoS",)))
        assert cat.resolve("ddos/dos").class_name == "DDoS/DoS"
        assert cat.resolve("DOS").class_name == "DDoS/DoS"
        assert cat.resolve("unknown") is None

    def test_alias_collision_rejected(self):
        a = feature_set(["x"], class_name="A", aliases=("DoS",))
        b = feature_set(["y"], class_name="B", aliases=("dos",))
        with pytest.raises(ValueError, match="not unique"):
            catalog(a, b)

    def test_version_pinned(self):
        with pytest.raises(ValueError, match="version"):
            DomainFeatureCatalog(classes=(feature_set(["x"]),), version=2)


class TestConfig:
    def test_defaults_mirror_protocol(self):
        config = EvaluationConfig()
        assert config.k_values == (5, 10, 20, 40)
        assert config.ranking_rule is RankingRule.ABSOLUTE
        assert config.aggregation == Aggregation.mean()

    @pytest.mark.parametrize("ks", [(), (0,), (5, 5), (10, 5)])
    def test_bad_k_values(self, ks):
        with pytest.raises(InvalidK):
            EvaluationConfig(k_values=ks)

    @pytest.mark.parametrize("alpha", [-0.1, 0.5, 0.6])
    def test_trimmed_alpha_range(self, alpha):
        with pytest.raises(ConfigError):
            Aggregation.trimmed(alpha)

    def test_aggregation_parse(self):
        assert Aggregation.parse("trimmed:0.2") == Aggregation.trimmed(0.2)
        assert Aggregation.parse("median") == Aggregation.median()
        with pytest.raises(ConfigError):
            Aggregation.parse("trimmed:0.6")
        with pytest.raises(ConfigError):
            Aggregation.parse("mode")

    def test_benign_labels_canonicalized(self):
        config = EvaluationConfig(benign_labels=frozenset({" BENIGN "}))
        assert config.is_benign("benign")


class TestMetricPoint:
    def test_value_bounds(self):
        with pytest.raises(ValueError):
            MetricPoint("FAP", "class", "c", 5, 1.5, 3)

    def test_support_needs_flag_when_zero(self):
        with pytest.raises(ValueError):
            MetricPoint("FAR", "class", "c", 5, 0.0, 0)
        MetricPoint("FAR", "class", "c", 5, 0.0, 0, flags=("EmptyDomainSet",))

    def test_curve_points_sorted(self):
        with pytest.raises(ValueError):
            CurveSeries("FAP", "class", "c", points=((2, 0.5), (1, 0.4)))
