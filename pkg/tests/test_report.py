import pytest

from falign.errors import IncompleteResults
from falign.ingest import ValidationReport
from falign.model import CurveSeries, EvaluationConfig, MetricPoint, TradeoffSeries
from falign.report import (
    ResultBundle,
    curve_data_csv,
    export_results,
    metric_point_from_dict,
    parse_structured_results,
    render_comparison_table,
    render_curves,
    render_metric_chart,
    render_tradeoff_chart,
    round_half_up,
    slugify,
)

# dataset-level comparison values for three explanation pipelines at four cutoffs
TABLE = {
    "RF": {5: (0.09, 0.04, 0.06), 10: (0.07, 0.06, 0.07), 20: (0.09, 0.25, 0.13), 40: (0.11, 0.63, 0.19)},
    "DNN": {5: (0.30, 0.18, 0.23), 10: (0.23, 0.25, 0.24), 20: (0.21, 0.44, 0.28), 40: (0.17, 0.70, 0.27)},
    "CNN-BiLSTM": {5: (0.17, 0.09, 0.12), 10: (0.16, 0.16, 0.16), 20: (0.18, 0.35, 0.24), 40: (0.20, 0.82, 0.32)},
}


def table_points(table=TABLE):
    out = {}
    for model, rows in table.items():
        points = []
        for k, (fap, far, faf1) in rows.items():
            for metric, value in zip(("FAP", "FAR", "FAF1"), (fap, far, faf1)):
                points.append(MetricPoint(metric, "dataset", "dataset", k, value, 100))
        out[model] = tuple(points)
    return out


class TestComparisonTable:
    def test_cells_render_rounded(self):
        table = render_comparison_table(table_points(), (5, 10, 20, 40))
        lines = table.text.splitlines()
        row5 = next(l for l in lines if l.startswith("5"))
        assert row5.split() == ["5", "0.09", "0.04", "0.06", "0.30", "0.18", "0.23", "0.17", "0.09", "0.12"]

    def test_two_decimal_half_up(self):
        assert round_half_up(0.666666) == "0.67"
        assert round_half_up(0.285) == "0.29"
        assert round_half_up(0.2) == "0.20"

    def test_delimited_keeps_full_precision(self):
        points = {"m": (MetricPoint("FAP", "dataset", "dataset", 5, 2 / 3, 9),
                        MetricPoint("FAR", "dataset", "dataset", 5, 0.5, 9),
                        MetricPoint("FAF1", "dataset", "dataset", 5, 0.25, 9))}
        table = render_comparison_table(points, (5,))
        assert "0.6666666666666666" in table.delimited
        assert "0.67" in table.text

    def test_missing_cell_raises_with_gap_list(self):
        points = table_points()
        points["modelX"] = points.pop("RF")[:-3]  # drop the k=40 triple
        with pytest.raises(IncompleteResults) as err:
            render_comparison_table(points, (5, 10, 20, 40))
        assert err.value.gaps == ["modelX@40"]


def sample_points():
    return (
        MetricPoint("FAP", "class", "c1", 5, 0.25, 4),
        MetricPoint("FAR", "class", "c1", 5, 0.5, 4, flags=("EmptyDomainSet",)),
        MetricPoint("FAF1", "dataset", "dataset", 5, 1 / 3, 4),
    )


class TestExports:
    def test_delimited_single_model_header(self):
        bundle = ResultBundle(EvaluationConfig(), {"m": sample_points()})
        text = export_results(bundle, "delimited")
        lines = text.splitlines()
        assert lines[0] == "metric,level,subject,k,value,support"
        assert len(lines) == 4

    def test_delimited_multi_model_gains_model_column(self):
        bundle = ResultBundle(
            EvaluationConfig(), {"m1": sample_points(), "m2": sample_points()}
        )
        lines = export_results(bundle, "delimited").splitlines()
        assert lines[0] == "model,metric,level,subject,k,value,support"
        assert len(lines) == 7

    def test_cardinality(self):
        points = tuple(
            MetricPoint(metric, "class", cls, k, 0.5, 3)
            for metric in ("FAP", "FAR", "FAF1")
            for cls in ("c1", "c2")
            for k in (5, 10, 20, 40)
        )
        bundle = ResultBundle(EvaluationConfig(), {"m": points})
        lines = export_results(bundle, "delimited").splitlines()
        assert len(lines) - 1 == 24

    def test_reexport_is_byte_identical(self):
        bundle = ResultBundle(EvaluationConfig(), {"m": sample_points()})
        assert export_results(bundle, "delimited") == export_results(bundle, "delimited")
        assert export_results(bundle, "structured") == export_results(bundle, "structured")

    def test_structured_round_trip_exact(self):
        reports = {"m": ValidationReport().finalize()}
        bundle = ResultBundle(EvaluationConfig(), {"m": sample_points()}, reports)
        text = export_results(bundle, "structured")
        parsed = parse_structured_results(text)
        assert set(parsed["m"]) == set(sample_points())

    def test_structured_echoes_effective_config(self):
        bundle = ResultBundle(EvaluationConfig(), {"m": sample_points()})
        text = export_results(bundle, "structured")
        assert '"ranking_rule": "absolute"' in text
        assert '"k_values"' in text

    def test_point_dict_round_trip(self):
        for p in sample_points():
            assert metric_point_from_dict(
                {"metric": p.metric, "level": p.level, "subject": p.subject,
                 "k": p.k, "value": p.value, "support": p.support, "flags": list(p.flags)}
            ) == p


def series(subject, points, markers=()):
    return CurveSeries("FAR", "class", subject, points=points, markers=markers)


class TestSvg:
    def test_one_polyline_and_legend_entry_per_subject(self):
        group = [
            series("c1", ((1, 0.1), (2, 0.4))),
            series("c2", ((1, 0.0), (2, 0.2))),
            series("c3", ((1, 0.5), (2, 0.9))),
        ]
        doc = render_metric_chart(group, "t")
        assert doc.count("<polyline") == 3
        for name in ("c1", "c2", "c3"):
            assert f">{name}</text>" in doc

    def test_marker_renders_labeled_reference_line(self):
        doc = render_metric_chart([series("c1", ((1, 0.1), (12, 0.4)), markers=((10, "k=10"),))], "t")
        assert "k=10" in doc
        assert doc.count("stroke-dasharray") == 1

    def test_no_markers_no_reference_lines(self):
        doc = render_metric_chart([series("c1", ((1, 0.1), (2, 0.4)))], "t")
        assert "stroke-dasharray" not in doc

    def test_single_point_series_has_no_polyline(self):
        doc = render_metric_chart([series("c1", ((5, 0.5),))], "t")
        assert "<polyline" not in doc
        assert "<circle" in doc

    def test_rendering_deterministic(self):
        group = [series("c1", ((1, 0.1), (2, 0.4)))]
        assert render_metric_chart(group, "t") == render_metric_chart(group, "t")

    def test_tradeoff_marker_line(self):
        t = TradeoffSeries(
            subject="DDoS/DoS",
            points=((5, 0.1, 0.9), (10, 0.4, 0.7), (20, 0.6, 0.5)),
            markers=((10, "k=10"),),
        )
        doc = render_tradeoff_chart(t, "t")
        assert "k=10" in doc and doc.count("stroke-dasharray") == 1

    def test_subject_text_escaped(self):
        doc = render_metric_chart([series("a&b<c>", ((1, 0.1), (2, 0.2)))], "t")
        assert "a&amp;b&lt;c&gt;" in doc

    def test_render_curves_file_names(self):
        group = [
            CurveSeries("FAP", "class", "DDoS/DoS", points=((1, 0.5),)),
            CurveSeries("FAP", "dataset", "dataset", points=((1, 0.5),)),
        ]
        tradeoffs = [TradeoffSeries(subject="DDoS/DoS", points=((1, 0.1, 0.5),))]
        docs = render_curves(group, tradeoffs)
        assert set(docs) == {"fap_class.svg", "fap_dataset.svg", "tradeoff_ddos-dos.svg"}

    def test_slugify(self):
        assert slugify("DDoS/DoS") == "ddos-dos"
        assert slugify("Web Attack - XSS") == "web-attack-xss"


def test_curve_data_csv():
    group = [CurveSeries("FAP", "class", "c1", points=((1, 0.5), (2, 1 / 3)))]
    text = curve_data_csv(group)
    lines = text.splitlines()
    assert lines[0] == "metric,level,subject,k,value"
    assert lines[2] == "FAP,class,c1,2,0.3333333333333333"
