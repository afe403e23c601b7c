"""Render comparison tables, machine-readable exports, and SVG curve documents.

Everything here is a pure function of its inputs: identical inputs produce
byte-identical output, so artifacts are diffable and cacheable.  Plots are
hand-built SVG rather than a plotting library for exactly that reason.
"""

from __future__ import annotations

import csv
import io
import json
import re
from dataclasses import dataclass
from decimal import Decimal, ROUND_HALF_UP
from typing import Iterable, Mapping, Sequence
from xml.sax.saxutils import escape

from .errors import IncompleteResults
from .ingest import ValidationReport
from .model import CurveSeries, EvaluationConfig, METRICS, MetricPoint, TradeoffSeries

_LEVEL_ORDER = {"dataset": 0, "class": 1, "instance": 2}
_METRIC_ORDER = {m: i for i, m in enumerate(METRICS)}


def round_half_up(value: float, places: int = 2) -> str:
    """Display rounding: decimal half-up on the shortest repr, e.g. 0.285 -> '0.29'."""
    q = Decimal(1).scaleb(-places)
    return str(Decimal(repr(value)).quantize(q, rounding=ROUND_HALF_UP))


class ComparisonTable:
    """A Top-k x (model x FAP/FAR/FAF1) table in text and delimited form."""

    def __init__(self, text: str, delimited: str):
        self.text = text
        self.delimited = delimited


def render_comparison_table(
    points_by_model: Mapping[str, Iterable[MetricPoint]],
    k_values: Sequence[int],
) -> ComparisonTable:
    """Tabulate dataset-level FAP/FAR/FAF1 per model at each k.

    The text table shows two-decimal half-up rounding; the delimited form
    keeps full precision.  Missing (model, k) cells raise IncompleteResults.
    """
    cells: dict[str, dict[int, dict[str, float]]] = {}
    for model, points in points_by_model.items():
        for p in points:
            if p.level == "dataset":
                cells.setdefault(model, {}).setdefault(p.k, {})[p.metric] = p.value

    models = list(points_by_model)
    gaps = []
    for model in models:
        for k in k_values:
            found = cells.get(model, {}).get(k, {})
            if any(m not in found for m in METRICS):
                gaps.append(f"{model}@{k}")
    if gaps:
        raise IncompleteResults(gaps)

    cell_w = 6
    group_w = cell_w * len(METRICS)
    k_w = max(5, *(len(str(k)) for k in k_values))

    head1 = " " * k_w + "  " + "  ".join(f"{m:<{group_w}}" for m in models)
    head2 = f"{'top-k':<{k_w}}" + "  " + "  ".join(
        "".join(f"{m:<{cell_w}}" for m in METRICS) for _ in models
    )
    lines = [head1.rstrip(), head2.rstrip()]
    for k in k_values:
        row = f"{k:<{k_w}}" + "  " + "  ".join(
            "".join(f"{round_half_up(cells[m][k][metric]):<{cell_w}}" for metric in METRICS)
            for m in models
        )
        lines.append(row.rstrip())
    text = "\n".join(lines) + "\n"

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["model", "k", "fap", "far", "faf1"])
    for model in models:
        for k in k_values:
            writer.writerow(
                [model, k] + [repr(cells[model][k][m]) for m in METRICS]
            )
    return ComparisonTable(text=text, delimited=buf.getvalue())


def _point_sort_key(p: MetricPoint):
    return (_LEVEL_ORDER[p.level], p.subject, p.k, _METRIC_ORDER[p.metric])


def metric_point_to_dict(p: MetricPoint) -> dict:
    return {
        "metric": p.metric,
        "level": p.level,
        "subject": p.subject,
        "k": p.k,
        "value": p.value,
        "support": p.support,
        "flags": list(p.flags),
    }


def metric_point_from_dict(d: Mapping) -> MetricPoint:
    return MetricPoint(
        metric=d["metric"],
        level=d["level"],
        subject=d["subject"],
        k=d["k"],
        value=d["value"],
        support=d["support"],
        flags=tuple(d.get("flags", ())),
    )


@dataclass(frozen=True)
class ResultBundle:
    """Everything one evaluation run produced, ready for export."""

    config: EvaluationConfig
    points_by_model: Mapping[str, tuple[MetricPoint, ...]]
    validation_by_model: Mapping[str, ValidationReport] | None = None


def export_results(bundle: ResultBundle, format: str = "delimited") -> str:
    """Serialize results: 'delimited' (CSV) or 'structured' (JSON).

    Byte-stable: points are emitted in a canonical order and floats keep
    their shortest round-trip repr, so re-exporting identical results gives
    identical bytes and the structured form parses back exactly.  The
    delimited header is (metric, level, subject, k, value, support); a
    leading model column appears only for multi-model bundles.
    """
    if format == "delimited":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        multi = len(bundle.points_by_model) > 1
        header = ["metric", "level", "subject", "k", "value", "support"]
        writer.writerow(["model"] + header if multi else header)
        for model, points in bundle.points_by_model.items():
            for p in sorted(points, key=_point_sort_key):
                row = [p.metric, p.level, p.subject, p.k, repr(p.value), p.support]
                writer.writerow([model] + row if multi else row)
        return buf.getvalue()
    if format == "structured":
        validation = bundle.validation_by_model or {}
        doc = {
            "config": bundle.config.to_dict(),
            "models": {
                model: {
                    "validation": (
                        validation[model].to_dict() if model in validation else None
                    ),
                    "points": [
                        metric_point_to_dict(p) for p in sorted(points, key=_point_sort_key)
                    ],
                }
                for model, points in bundle.points_by_model.items()
            },
        }
        return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n"
    raise ValueError(f"unknown export format {format!r}")


def parse_structured_results(text: str) -> dict[str, tuple[MetricPoint, ...]]:
    """Inverse of export_results('structured') for the points payload."""
    doc = json.loads(text)
    return {
        model: tuple(metric_point_from_dict(d) for d in body["points"])
        for model, body in doc["models"].items()
    }


# --- SVG rendering ------------------------------------------------------

PALETTE = (
    "#1f77b4",
    "#d62728",
    "#2ca02c",
    "#9467bd",
    "#ff7f0e",
    "#8c564b",
    "#17becf",
    "#7f7f7f",
)


@dataclass(frozen=True)
class StyleConfig:
    width: int = 640
    height: int = 420
    margin_left: int = 62
    margin_right: int = 170
    margin_top: int = 46
    margin_bottom: int = 52
    palette: tuple[str, ...] = PALETTE
    font: str = "monospace"


def slugify(name: str) -> str:
    """Filesystem-safe subject slug: 'DDoS/DoS' -> 'ddos-dos'."""
    slug = re.sub(r"[^a-z0-9._]+", "-", name.lower()).strip("-")
    return slug or "subject"


class _Svg:
    def __init__(self, style: StyleConfig):
        self.style = style
        self.parts: list[str] = [
            '<?xml version="1.0" encoding="UTF-8"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{style.width}" '
            f'height="{style.height}" viewBox="0 0 {style.width} {style.height}">\n'
            f'<rect width="{style.width}" height="{style.height}" fill="white"/>\n'
        ]

    def line(self, x1: float, y1: float, x2: float, y2: float, stroke: str, extra: str = "") -> None:
        self.parts.append(
            f'<line x1="{x1:.2f}" y1="{y1:.2f}" x2="{x2:.2f}" y2="{y2:.2f}" '
            f'stroke="{stroke}" {extra}/>\n'
        )

    def text(self, x: float, y: float, content: str, size: int = 12, extra: str = "") -> None:
        self.parts.append(
            f'<text x="{x:.2f}" y="{y:.2f}" font-family="{self.style.font}" '
            f'font-size="{size}" {extra}>{escape(content)}</text>\n'
        )

    def polyline(self, coords: Sequence[tuple[float, float]], stroke: str) -> None:
        pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in coords)
        self.parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{stroke}" stroke-width="1.5"/>\n'
        )

    def circle(self, x: float, y: float, fill: str, r: float = 2.5) -> None:
        self.parts.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="{r}" fill="{fill}"/>\n')

    def done(self) -> str:
        return "".join(self.parts) + "</svg>\n"


def _frame(svg: _Svg, title: str, x_label: str, y_label: str):
    s = svg.style
    x0, y0 = s.margin_left, s.height - s.margin_bottom
    x1, y1 = s.width - s.margin_right, s.margin_top
    svg.text(s.margin_left, s.margin_top - 18, title, size=14)
    svg.line(x0, y0, x1, y0, "#333333")
    svg.line(x0, y0, x0, y1, "#333333")
    svg.text((x0 + x1) / 2 - 4 * len(x_label), s.height - 12, x_label)
    svg.text(10, (y0 + y1) / 2, y_label)
    return x0, y0, x1, y1


def _y_ticks(svg: _Svg, x0: float, y0: float, y1: float) -> None:
    for i in range(6):
        v = i / 5
        y = y0 + (y1 - y0) * v
        svg.line(x0 - 4, y, x0, y, "#333333")
        svg.text(x0 - 40, y + 4, f"{v:.1f}", size=10)


def _legend(svg: _Svg, names: Sequence[str], colors: Sequence[str]) -> None:
    s = svg.style
    lx = s.width - s.margin_right + 14
    for i, (name, color) in enumerate(zip(names, colors)):
        ly = s.margin_top + 14 + 16 * i
        svg.line(lx, ly - 4, lx + 18, ly - 4, color, 'stroke-width="2"')
        svg.text(lx + 24, ly, name, size=10)


def render_metric_chart(
    series: Sequence[CurveSeries], title: str, style: StyleConfig = StyleConfig()
) -> str:
    """One metric-vs-k chart: a polyline per subject, y in [0,1], markers as vertical lines."""
    if not series:
        raise ValueError("no series to render")
    svg = _Svg(style)
    x0, y0, x1, y1 = _frame(svg, title, "k", series[0].metric)
    ks = sorted({k for s in series for k in s.k_values})
    k_lo, k_hi = ks[0], ks[-1]
    span = max(1, k_hi - k_lo)

    def px(k: float) -> float:
        return x0 + (x1 - x0) * (k - k_lo) / span

    def py(v: float) -> float:
        return y0 + (y1 - y0) * v

    _y_ticks(svg, x0, y0, y1)
    step = max(1, (span + 7) // 8)
    for k in range(k_lo, k_hi + 1, step):
        svg.line(px(k), y0, px(k), y0 + 4, "#333333")
        svg.text(px(k) - 4, y0 + 16, str(k), size=10)

    ordered = sorted(series, key=lambda s: s.subject)
    colors = [style.palette[i % len(style.palette)] for i in range(len(ordered))]
    seen_markers: set[tuple[int, str]] = set()
    for s, color in zip(ordered, colors):
        coords = [(px(k), py(v)) for k, v in s.points]
        if len(coords) >= 2:
            svg.polyline(coords, color)
        for x, y in coords:
            svg.circle(x, y, color)
        for mk, label in s.markers:
            if (mk, label) in seen_markers or not k_lo <= mk <= k_hi:
                continue
            seen_markers.add((mk, label))
            svg.line(px(mk), y0, px(mk), y1, "#999999", 'stroke-dasharray="4 3"')
            svg.text(px(mk) + 3, y1 + 10, label, size=10, extra='fill="#555555"')
    _legend(svg, [s.subject for s in ordered], colors)
    return svg.done()


def render_tradeoff_chart(
    tradeoff: TradeoffSeries, title: str, style: StyleConfig = StyleConfig()
) -> str:
    """FAP-vs-FAR chart for one subject; k cutoffs appear as labeled vertical lines."""
    svg = _Svg(style)
    x0, y0, x1, y1 = _frame(svg, title, "FAR", "FAP")

    def px(v: float) -> float:
        return x0 + (x1 - x0) * v

    def py(v: float) -> float:
        return y0 + (y1 - y0) * v

    _y_ticks(svg, x0, y0, y1)
    for i in range(6):
        v = i / 5
        svg.line(px(v), y0, px(v), y0 + 4, "#333333")
        svg.text(px(v) - 8, y0 + 16, f"{v:.1f}", size=10)

    color = style.palette[0]
    by_k = {k: (far, fap) for k, far, fap in tradeoff.points}
    coords = [(px(far), py(fap)) for _, far, fap in tradeoff.points]
    if len(coords) >= 2:
        svg.polyline(coords, color)
    for x, y in coords:
        svg.circle(x, y, color)
    for mk, label in tradeoff.markers:
        if mk not in by_k:
            continue
        far, _ = by_k[mk]
        svg.line(px(far), y0, px(far), y1, "#999999", 'stroke-dasharray="4 3"')
        svg.text(px(far) + 3, y1 + 10, label, size=10, extra='fill="#555555"')
    _legend(svg, [tradeoff.subject], [color])
    return svg.done()


def render_curves(
    series: Sequence[CurveSeries],
    tradeoffs: Sequence[TradeoffSeries] = (),
    style: StyleConfig = StyleConfig(),
) -> dict[str, str]:
    """All curve documents keyed by file name: <metric>_<level>.svg, tradeoff_<class>.svg."""
    docs: dict[str, str] = {}
    for metric in METRICS:
        for level in ("class", "dataset"):
            group = [s for s in series if s.metric == metric and s.level == level]
            if group:
                docs[f"{metric.lower()}_{level}.svg"] = render_metric_chart(
                    group, f"{metric} by k ({level} level)", style
                )
    for t in tradeoffs:
        docs[f"tradeoff_{slugify(t.subject)}.svg"] = render_tradeoff_chart(
            t, f"FAP vs FAR: {t.subject}", style
        )
    return docs


def curve_data_csv(series: Sequence[CurveSeries]) -> str:
    """Curve points as CSV (metric, level, subject, k, value), full precision."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["metric", "level", "subject", "k", "value"])
    for s in sorted(series, key=lambda s: (_METRIC_ORDER[s.metric], _LEVEL_ORDER[s.level], s.subject)):
        for k, v in s.points:
            writer.writerow([s.metric, s.level, s.subject, k, repr(v)])
    return buf.getvalue()


def tradeoff_data_csv(tradeoffs: Sequence[TradeoffSeries]) -> str:
    """Trade-off points as CSV (subject, k, far, fap), full precision."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["subject", "k", "far", "fap"])
    for t in sorted(tradeoffs, key=lambda t: t.subject):
        for k, far, fap in t.points:
            writer.writerow([t.subject, k, repr(far), repr(fap)])
    return buf.getvalue()
