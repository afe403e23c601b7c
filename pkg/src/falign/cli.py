"""Command-line entry point: validate, evaluate, sweep, synth.

Exit codes follow batch-tool convention: 0 success, 1 evaluable failure
(validation errors, nothing left to evaluate), 2 usage error.  Output files
are byte-deterministic for identical inputs and flags; FALIGN_WORKERS may
parallelize per-model work without affecting results.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import ingest, report, sweep
from .errors import EmptyInput, FalignError, IncompleteResults, NoEvaluableClasses
from .model import (
    Aggregation,
    EmptySetPolicy,
    EvaluationConfig,
    RankingRule,
    ScopingRule,
    validate_k_grid,
)
from . import synth as synthmod

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

WORKERS_ENV = "FALIGN_WORKERS"

LEVEL_CHOICES = ("instance", "class", "dataset", "all")


class UsageError(Exception):
    pass


def workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def parse_model_specs(specs: list[str]) -> list[tuple[str, Path]]:
    """--explanations values: 'NAME=PATH' or bare 'PATH' (name = file stem)."""
    out: list[tuple[str, Path]] = []
    seen: set[str] = set()
    for spec in specs:
        if "=" in spec:
            name, _, path = spec.partition("=")
        else:
            name, path = Path(spec).stem, spec
        if not name or not path:
            raise UsageError(f"bad --explanations value {spec!r}, expected NAME=PATH or PATH")
        if name in seen:
            raise UsageError(f"duplicate model name {name!r}")
        seen.add(name)
        out.append((name, Path(path)))
    return out


def parse_k_list(text: str) -> tuple[int, ...]:
    try:
        ks = tuple(int(part) for part in text.split(","))
    except ValueError:
        raise UsageError(f"bad --k list {text!r}, expected e.g. 5,10,20,40")
    validate_k_grid(ks)
    return ks


def parse_k_range(text: str) -> tuple[int, int]:
    lo, sep, hi = text.partition("..")
    if not sep:
        raise UsageError(f"bad --k-range {text!r}, expected LO..HI")
    try:
        lo_i, hi_i = int(lo), int(hi)
    except ValueError:
        raise UsageError(f"bad --k-range {text!r}, expected LO..HI")
    if lo_i < 1 or hi_i < lo_i:
        raise UsageError(f"bad --k-range {text!r}: need 1 <= LO <= HI")
    return lo_i, hi_i


def build_config(args: argparse.Namespace, k_values: tuple[int, ...]) -> EvaluationConfig:
    return EvaluationConfig(
        ranking_rule=RankingRule(args.ranking.replace("-", "_")),
        scoping_rule=ScopingRule(args.scope.replace("-", "_")),
        k_values=k_values,
        aggregation=Aggregation.parse(args.agg),
        empty_set_policy=(
            EmptySetPolicy.EXCLUDE
            if args.empty_set_policy == "exclude"
            else EmptySetPolicy.INCLUDE_AS_ZERO
        ),
        benign_labels=frozenset(b for b in args.benign.split(",") if b.strip()),
    )


def print_report(rep: ingest.ValidationReport, heading: str) -> None:
    print(f"== {heading} ==")
    print(f"errors ({len(rep.errors)}):")
    for issue in rep.errors:
        print(f"  {issue.subject}: [{issue.code}] {issue.message}")
    print(f"warnings ({len(rep.warnings)}):")
    for issue in rep.warnings:
        print(f"  {issue.subject}: [{issue.code}] {issue.message}")
    stats = " ".join(f"{key}={value}" for key, value in sorted(rep.stats.items()))
    print(f"stats: {stats}")


def _load_model(
    path: Path, catalog, config: EvaluationConfig
) -> tuple[tuple, ingest.ValidationReport]:
    records, rep = ingest.load_explanations(path)
    rep = rep.merged(ingest.cross_validate(records, catalog, config.benign_labels))
    rep = rep.merged(ingest.scope_errors(records, catalog, config))
    return records, rep


def _require_readable(paths: list[Path]) -> None:
    for path in paths:
        if not path.is_file():
            raise UsageError(f"cannot read {path}")


def cmd_validate(args: argparse.Namespace) -> int:
    models = parse_model_specs(args.explanations)
    _require_readable([path for _, path in models] + [Path(args.catalog)])
    catalog, catalog_report = ingest.load_catalog(args.catalog)
    print_report(catalog_report, f"catalog: {args.catalog}")
    failed = not catalog_report.ok
    if catalog is not None:
        config = EvaluationConfig()
        for name, path in models:
            _, rep = _load_model(path, catalog, config)
            print_report(rep, f"model: {name}")
            failed = failed or not rep.ok
    return EXIT_FAILURE if failed else EXIT_OK


def cmd_evaluate(args: argparse.Namespace) -> int:
    models = parse_model_specs(args.explanations)
    _require_readable([path for _, path in models] + [Path(args.catalog)])
    k_values = parse_k_list(args.k)
    config = build_config(args, k_values)
    levels = LEVEL_CHOICES[:3] if args.level == "all" else (args.level,)

    catalog, catalog_report = ingest.load_catalog(args.catalog)
    if catalog is None or not catalog_report.ok:
        print_report(catalog_report, f"catalog: {args.catalog}")
        return EXIT_FAILURE

    def run_one(item: tuple[str, Path]):
        name, path = item
        records, rep = _load_model(path, catalog, config)
        if not rep.ok:
            return name, rep, None
        scope = ingest.build_scope(records, catalog, config)
        points = sweep.compute_points(
            sweep.corpus_index(records), catalog, scope, config, k_values, levels
        )
        return name, rep, points

    n_workers = min(workers(), len(models))
    if n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(run_one, models))
    else:
        results = [run_one(item) for item in models]

    failed = False
    points_by_model: dict[str, tuple] = {}
    validation_by_model: dict[str, ingest.ValidationReport] = {}
    for name, rep, points in results:
        validation_by_model[name] = rep.merged(catalog_report)
        if points is None:
            print_report(rep, f"model: {name}")
            failed = True
        else:
            points_by_model[name] = points.all_points()
    if failed:
        return EXIT_FAILURE

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    bundle = report.ResultBundle(
        config=config,
        points_by_model=points_by_model,
        validation_by_model=validation_by_model,
    )
    if args.format in ("delimited", "all"):
        _write(out / "results.csv", report.export_results(bundle, "delimited"))
    if args.format in ("structured", "all"):
        _write(out / "results.json", report.export_results(bundle, "structured"))

    if "dataset" in levels:
        table = report.render_comparison_table(points_by_model, k_values)
        _write(out / "table.txt", table.text)
        _write(out / "table.csv", table.delimited)
        print(table.text, end="")
    total_warnings = sum(len(r.warnings) for r in validation_by_model.values())
    print(f"wrote {out}/ ({len(points_by_model)} model(s), {total_warnings} warning(s))")
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    models = parse_model_specs(args.explanations)
    if len(models) != 1:
        raise UsageError("sweep takes exactly one --explanations file")
    name, path = models[0]
    _require_readable([path, Path(args.catalog)])
    k_lo, k_hi = parse_k_range(args.k_range)
    config = build_config(args, k_values=tuple(range(k_lo, k_hi + 1)))

    catalog, catalog_report = ingest.load_catalog(args.catalog)
    if catalog is None or not catalog_report.ok:
        print_report(catalog_report, f"catalog: {args.catalog}")
        return EXIT_FAILURE
    records, rep = _load_model(path, catalog, config)
    if not rep.ok:
        print_report(rep, f"model: {name}")
        return EXIT_FAILURE

    scope = ingest.build_scope(records, catalog, config)
    series = sweep.run_sweep(
        sweep.corpus_index(records), catalog, scope, config, (k_lo, k_hi)
    )

    tradeoffs = []
    summary: dict = {"classes": {}}
    by_key = {(s.metric, s.level, s.subject): s for s in series}
    for class_name in scope.per_class:
        fap_s = by_key[("FAP", "class", class_name)]
        far_s = by_key[("FAR", "class", class_name)]
        faf1_s = by_key[("FAF1", "class", class_name)]
        size = catalog.resolve(class_name).size
        tradeoffs.append(sweep.tradeoff_curve(fap_s, far_s, size))
        peak_k, peak_v = sweep.peak_faf1(faf1_s)
        summary["classes"][class_name] = {
            "domain_set_size": size,
            "far_saturation_k": sweep.far_saturation(far_s),
            "peak_faf1": {"k": peak_k, "value": peak_v},
        }

    out = Path(args.out)
    curves_dir = out / "curves"
    curves_dir.mkdir(parents=True, exist_ok=True)
    for filename, doc in report.render_curves(series, tradeoffs).items():
        _write(curves_dir / filename, doc)
    _write(out / "curves.csv", report.curve_data_csv(series))
    _write(out / "tradeoff.csv", report.tradeoff_data_csv(tradeoffs))

    summary["config"] = config.to_dict()
    summary["k_range"] = [k_lo, k_hi]
    summary["model"] = name
    _write(out / "sweep.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")

    for class_name, info in sorted(summary["classes"].items()):
        peak = info["peak_faf1"]
        print(
            f"{class_name}: |F|={info['domain_set_size']} "
            f"far_saturation_k={info['far_saturation_k']} "
            f"peak_faf1={peak['value']:.4f}@k={peak['k']}"
        )
    print(f"wrote {out}/")
    return EXIT_OK


def cmd_synth(args: argparse.Namespace) -> int:
    if args.mode == "aligned":
        record, feature_set = synthmod.gen_aligned(
            args.n_features, args.set_size, args.alignment, args.seed, args.class_name
        )
        records = (record,)
    else:
        records, feature_set = synthmod.gen_random(
            args.n_features, args.set_size, args.instances, args.seed, args.class_name
        )
    lines = "".join(ingest.serialize_attribution(r) + "\n" for r in records)
    _write(Path(args.out), lines)
    if args.catalog_out:
        _write(
            Path(args.catalog_out),
            ingest.serialize_catalog(synthmod.catalog_for(feature_set)),
        )
    print(f"wrote {len(records)} instance(s) to {args.out}")
    return EXIT_OK


def _write(path: Path, content: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(content)


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--agg", default="mean", help="mean | median | trimmed:ALPHA | weighted")
    p.add_argument(
        "--ranking",
        default="absolute",
        choices=("absolute", "signed", "positive-only", "positive_only"),
    )
    p.add_argument(
        "--scope",
        default="correct-only",
        choices=("correct-only", "true-class-all", "correct_only", "true_class_all"),
    )
    p.add_argument(
        "--empty-set-policy", default="exclude", choices=("exclude", "include-as-zero")
    )
    p.add_argument("--benign", default="benign", help="comma-separated benign labels")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="falign",
        description="Evaluate how well top-k explanation features align with "
        "domain-informed feature catalogs (FAP / FAR / FAF1).",
        epilog=f"Set {WORKERS_ENV} to parallelize per-model work; results are "
        "identical for any worker count.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_val = sub.add_parser("validate", help="validate explanation exports against a catalog")
    p_val.add_argument("--explanations", action="append", required=True, metavar="[NAME=]PATH")
    p_val.add_argument("--catalog", required=True)
    p_val.set_defaults(func=cmd_validate)

    p_eval = sub.add_parser("evaluate", help="compute metrics at fixed k values")
    p_eval.add_argument("--explanations", action="append", required=True, metavar="[NAME=]PATH")
    p_eval.add_argument("--catalog", required=True)
    p_eval.add_argument("--k", default="5,10,20,40", help="comma-separated k cutoffs")
    p_eval.add_argument("--level", default="all", choices=LEVEL_CHOICES)
    _add_config_flags(p_eval)
    p_eval.add_argument("--out", required=True)
    p_eval.add_argument("--format", default="all", choices=("delimited", "structured", "all"))
    p_eval.set_defaults(func=cmd_evaluate)

    p_sweep = sub.add_parser("sweep", help="sweep k and emit curve artifacts")
    p_sweep.add_argument("--explanations", action="append", required=True, metavar="[NAME=]PATH")
    p_sweep.add_argument("--catalog", required=True)
    p_sweep.add_argument("--k-range", default="1..40", metavar="LO..HI")
    _add_config_flags(p_sweep)
    p_sweep.add_argument("--out", required=True)
    p_sweep.set_defaults(func=cmd_sweep)

    p_synth = sub.add_parser("synth", help="generate synthetic corpora for pipeline tests")
    p_synth.add_argument("--mode", default="random", choices=("aligned", "random"))
    p_synth.add_argument("--n-features", type=int, default=78)
    p_synth.add_argument("--set-size", type=int, default=10)
    p_synth.add_argument("--alignment", type=float, default=0.5)
    p_synth.add_argument("--instances", type=int, default=100)
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--class-name", default=synthmod.DEFAULT_CLASS)
    p_synth.add_argument("--out", required=True)
    p_synth.add_argument("--catalog-out", default=None)
    p_synth.set_defaults(func=cmd_synth)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NoEvaluableClasses, IncompleteResults, EmptyInput) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except FalignError as exc:
        # remaining library errors stem from flag values (config, k, synth spec)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def entrypoint() -> None:  # console-script shim
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
