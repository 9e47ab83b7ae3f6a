"""Command-line front end: profile, transform, reconstruct, report."""

from __future__ import annotations

import argparse
import sys

from fuzzanon.data import (column_stats, format_cell, load_csv, load_schema,
                           write_csv)
from fuzzanon.errors import FuzzanonError, PipelineStageError
from fuzzanon.pipeline import PipelineConfig, read_report, run_pipeline
from fuzzanon.transforms import ACTION_FUZZIFIED, TransformMetadata, reconstruct

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_STAGE = 3


def _parse_bins(text: str):
    if text == "sturges":
        return text
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"--bins takes 'sturges' or a positive integer, got {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError("--bins must be >= 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fuzzanon",
        description="Anonymize tabular data: cluster records, flag sensitive "
                    "values, fuzzify numerics, suppress categoricals.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--schema", help="schema JSON file")
        p.add_argument("--config", help="pipeline config JSON; explicit "
                                        "flags override its values")
        p.add_argument("--quiet", action="store_true",
                       help="suppress informational output")

    p = sub.add_parser("profile", help="show per-attribute roles and stats")
    p.add_argument("input", help="input CSV file")
    common(p)

    p = sub.add_parser("transform", help="run the anonymization pipeline")
    p.add_argument("input", help="input CSV file")
    common(p)
    p.add_argument("-k", type=int, default=None, help="cluster count "
                   "(default 5)")
    p.add_argument("--bins", type=_parse_bins, default=None,
                   help="'sturges' (default) or a fixed bin count")
    p.add_argument("--and-policy", choices=["universal", "pairwise"],
                   default=None, help="sensitivity conjunction policy")
    p.add_argument("--token", default=None,
                   help="default suppression token (default 'Unknown')")
    p.add_argument("--features", default=None,
                   help="comma-separated numeric attributes to cluster on")
    p.add_argument("-o", "--output", default=None, help="output CSV path")
    p.add_argument("--meta", default=None,
                   help="metadata sidecar path (default OUTPUT.meta.json)")
    p.add_argument("--report", default=None,
                   help="report JSON path (default OUTPUT.report.json)")
    p.add_argument("--dendrogram", default=None,
                   help="write the merge history as JSON")
    p.add_argument("--analysis", default=None,
                   help="write per-(cluster, attribute) distributions as JSON")
    p.add_argument("--drop-identifiers", action="store_true", default=None,
                   help="drop identifier columns instead of suppressing them")

    p = sub.add_parser("reconstruct",
                       help="recover fuzzified values from a sidecar")
    p.add_argument("input", help="modified CSV file")
    p.add_argument("metadata", help="metadata sidecar (.meta.json)")
    common(p)
    p.add_argument("-o", "--output", required=True,
                   help="reconstructed CSV path")

    p = sub.add_parser("report", help="render a pipeline report")
    p.add_argument("report", help="report JSON written by transform")
    common(p)
    p.add_argument("--baseline", action="store_true",
                   help="include the column-retention comparison")
    p.add_argument("--csv", action="store_true",
                   help="emit chart data as CSV instead of tables")

    return parser


def _require_schema(args) -> str:
    if args.schema:
        return args.schema
    if args.config:
        schema = PipelineConfig.from_json_file(args.config).schema_path
        if schema:
            return schema
    raise FuzzanonError("--schema is required (directly or via --config)")


def cmd_profile(args) -> int:
    schema = load_schema(_require_schema(args))
    table = load_csv(args.input, schema)
    name_width = max(len("attribute"), *(len(n) for n in schema.names))
    print(f"{'attribute':<{name_width}} {'role':<21} {'kind':<12} "
          f"{'min':>12} {'max':>12} {'distinct':>9} {'missing':>8}")
    counts = {"identifiers": 0, "sensitive": 0, "quasi": 0,
              "non-sensitive": 0}
    for attr in schema.attributes:
        stats = column_stats(table, attr.name)
        lo = format_cell(stats.minimum) if stats.minimum is not None else "-"
        hi = format_cell(stats.maximum) if stats.maximum is not None else "-"
        print(f"{attr.name:<{name_width}} {attr.role.value:<21} "
              f"{attr.kind:<12} {lo:>12} {hi:>12} {stats.distinct:>9} "
              f"{stats.missing:>8}")
        if attr.role.is_sensitive:
            counts["sensitive"] += 1
        elif attr.role.is_quasi:
            counts["quasi"] += 1
        elif attr.role.value == "Identifier":
            counts["identifiers"] += 1
        else:
            counts["non-sensitive"] += 1
    print(f"{table.n_rows} records, {len(schema)} attributes: "
          f"{counts['identifiers']} identifiers, "
          f"{counts['sensitive']} sensitive, {counts['quasi']} quasi, "
          f"{counts['non-sensitive']} non-sensitive")
    return EXIT_OK


def _build_config(args) -> PipelineConfig:
    if args.config:
        config = PipelineConfig.from_json_file(args.config)
    else:
        config = PipelineConfig(input_path="", schema_path="")
    overrides = {
        "input_path": args.input,
        "schema_path": args.schema,
        "k": args.k,
        "bins": args.bins,
        "and_policy": args.and_policy,
        "default_token": args.token,
        "features": args.features.split(",") if args.features else None,
        "output_path": args.output,
        "metadata_path": args.meta,
        "report_path": args.report,
        "dendrogram_path": args.dendrogram,
        "analysis_path": args.analysis,
        "drop_identifiers": args.drop_identifiers,
    }
    for name, value in overrides.items():
        if value is not None:
            setattr(config, name, value)
    if not config.output_path:
        stem = args.input[:-4] if args.input.endswith(".csv") else args.input
        config.output_path = f"{stem}.anon.csv"
    return config


def cmd_transform(args) -> int:
    config = _build_config(args)
    result = run_pipeline(config)
    if not args.quiet:
        print(result.report.render_text())
        print()
        written = [config.output_path,
                   config.metadata_path or f"{config.output_path}.meta.json",
                   config.report_path or f"{config.output_path}.report.json"]
        if config.dendrogram_path:
            written.append(config.dendrogram_path)
        if config.analysis_path:
            written.append(config.analysis_path)
        print("wrote: " + ", ".join(written))
    return EXIT_OK


def cmd_reconstruct(args) -> int:
    schema = load_schema(_require_schema(args))
    table = load_csv(args.input, schema)
    metadata = TransformMetadata.read(args.metadata)
    restored = reconstruct(table, metadata)
    write_csv(restored, args.output)
    if not args.quiet:
        counts = metadata.action_counts()
        recovered = counts.get(ACTION_FUZZIFIED, 0)
        lost = sum(v for k, v in counts.items() if k != ACTION_FUZZIFIED)
        print(f"recovered {recovered} fuzzified cells; "
              f"{lost} cells non-recoverable (suppressed/generalized)")
        print(f"wrote: {args.output}")
    return EXIT_OK


def cmd_report(args) -> int:
    report, comparison = read_report(args.report)
    if args.csv:
        print("cluster_id,records,modified,fraction")
        for cluster_id, records, modified, fraction in report.chart_rows():
            print(f"{cluster_id},{records},{modified},{fraction!r}")
        return EXIT_OK
    print(report.render_text())
    if args.baseline:
        if comparison is None:
            raise FuzzanonError(f"{args.report}: no comparison section")
        print()
        print(comparison.render_text())
    return EXIT_OK


_COMMANDS = {
    "profile": cmd_profile,
    "transform": cmd_transform,
    "reconstruct": cmd_reconstruct,
    "report": cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except PipelineStageError as exc:
        print(f"fuzzanon: error: {exc}", file=sys.stderr)
        return EXIT_STAGE
    except (FuzzanonError, OSError, ValueError, KeyError) as exc:
        print(f"fuzzanon: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
