"""End-to-end anonymization pipeline, the column-dropping baseline, and the
modification/comparison reports."""

from __future__ import annotations

import json
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from fuzzanon.anonymizer import build_distributions, check_table
from fuzzanon.clustering import (ClusterAssignment, MergeStep,
                                 export_merge_steps, feature_matrix,
                                 ward_cluster)
from fuzzanon.data import (DEFAULT_MISSING_MARKERS, AttributeRole, DataTable,
                           Schema, load_csv, load_schema, write_csv)
from fuzzanon.errors import (ConfigError, FingerprintMismatchError,
                             FuzzanonError, PipelineStageError)
from fuzzanon.sensitivity import (SensitivityMask, Threshold,
                                  distributions_to_json, flag_sensitive)
from fuzzanon.transforms import (ACTION_SUPPRESSED, DEFAULT_TOKEN, LedgerEntry,
                                 TransformMetadata, _resolve_token,
                                 apply_transforms, compute_fuzzy_params)


@dataclass
class PipelineConfig:
    """Everything one anonymization run needs; serializable for repeat runs."""

    input_path: str
    schema_path: str
    k: int = 5
    bins: int | str = "sturges"
    and_policy: str = "universal"
    default_token: str = DEFAULT_TOKEN
    tokens: dict[str, str] = field(default_factory=dict)
    features: list[str] | None = None
    output_path: str | None = None
    metadata_path: str | None = None
    report_path: str | None = None
    dendrogram_path: str | None = None
    analysis_path: str | None = None
    drop_identifiers: bool = False
    missing_markers: tuple[str, ...] = DEFAULT_MISSING_MARKERS
    seed: int | None = None  # reserved: the pipeline is deterministic

    def validate(self) -> None:
        if not self.input_path:
            raise ConfigError("input path must be non-empty")
        if not self.schema_path:
            raise ConfigError("schema path must be non-empty")
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if self.bins != "sturges" and not (
                isinstance(self.bins, int) and not isinstance(self.bins, bool)
                and self.bins >= 1):
            raise ConfigError(f"bins must be 'sturges' or a positive integer, "
                              f"got {self.bins!r}")
        if self.and_policy not in ("universal", "pairwise"):
            raise ConfigError(f"and-policy must be 'universal' or 'pairwise', "
                              f"got {self.and_policy!r}")

    def to_json_dict(self) -> dict:
        return {
            "input": self.input_path,
            "schema": self.schema_path,
            "k": self.k,
            "bins": self.bins,
            "and_policy": self.and_policy,
            "default_token": self.default_token,
            "tokens": dict(self.tokens),
            "features": list(self.features) if self.features else None,
            "output": self.output_path,
            "metadata": self.metadata_path,
            "report": self.report_path,
            "dendrogram": self.dendrogram_path,
            "analysis": self.analysis_path,
            "drop_identifiers": self.drop_identifiers,
            "missing_markers": list(self.missing_markers),
            "seed": self.seed,
        }

    @classmethod
    def from_json_dict(cls, doc: Mapping) -> "PipelineConfig":
        known = {
            "input": "input_path", "schema": "schema_path", "k": "k",
            "bins": "bins", "and_policy": "and_policy",
            "default_token": "default_token", "tokens": "tokens",
            "features": "features", "output": "output_path",
            "metadata": "metadata_path", "report": "report_path",
            "dendrogram": "dendrogram_path", "analysis": "analysis_path",
            "drop_identifiers": "drop_identifiers",
            "missing_markers": "missing_markers", "seed": "seed",
        }
        unknown = [k for k in doc if k not in known]
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kwargs = {known[k]: v for k, v in doc.items() if v is not None}
        if "missing_markers" in kwargs:
            kwargs["missing_markers"] = tuple(kwargs["missing_markers"])
        return cls(input_path=kwargs.pop("input_path", ""),
                   schema_path=kwargs.pop("schema_path", ""), **kwargs)

    @classmethod
    def from_json_file(cls, path: str | Path) -> "PipelineConfig":
        with open(path, "r", encoding="utf-8") as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: not valid JSON: {exc}") from None
        return cls.from_json_dict(doc)


@dataclass
class ClusterReportRow:
    cluster: int
    records: int
    flagged: int
    modified_cells: int
    fraction: float
    thresholds: dict[str, float]


@dataclass
class ModificationReport:
    """Cluster-wise and dataset-wide view of how much was modified."""

    clusters: list[ClusterReportRow]
    total_records: int
    total_flagged: int
    total_modified_cells: int
    overall_fraction: float
    attribute_sensitivity: dict[str, float]
    parameters: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "clusters": [
                {"id": r.cluster, "size": r.records, "flagged": r.flagged,
                 "modified_cells": r.modified_cells, "fraction": r.fraction,
                 "thresholds": dict(r.thresholds)}
                for r in self.clusters
            ],
            "totals": {
                "records": self.total_records,
                "flagged": self.total_flagged,
                "modified_cells": self.total_modified_cells,
                "fraction": self.overall_fraction,
            },
            "attribute_sensitivity": dict(self.attribute_sensitivity),
            "parameters": dict(self.parameters),
        }

    @classmethod
    def from_json_dict(cls, doc: Mapping) -> "ModificationReport":
        clusters = [ClusterReportRow(
            cluster=int(c["id"]), records=int(c["size"]),
            flagged=int(c["flagged"]),
            modified_cells=int(c["modified_cells"]),
            fraction=float(c["fraction"]),
            thresholds={k: float(v) for k, v in c["thresholds"].items()})
            for c in doc["clusters"]]
        totals = doc["totals"]
        return cls(clusters=clusters,
                   total_records=int(totals["records"]),
                   total_flagged=int(totals["flagged"]),
                   total_modified_cells=int(totals["modified_cells"]),
                   overall_fraction=float(totals["fraction"]),
                   attribute_sensitivity=dict(
                       doc.get("attribute_sensitivity", {})),
                   parameters=dict(doc.get("parameters", {})))

    def render_text(self) -> str:
        lines = [f"{'cluster':>8} {'records':>9} {'flagged':>9} "
                 f"{'cells':>9} {'fraction':>9}"]
        for r in self.clusters:
            lines.append(f"{r.cluster:>8} {r.records:>9} {r.flagged:>9} "
                         f"{r.modified_cells:>9} {r.fraction:>8.2%}")
        lines.append(f"{'total':>8} {self.total_records:>9} "
                     f"{self.total_flagged:>9} {self.total_modified_cells:>9} "
                     f"{self.overall_fraction:>8.2%}")
        if self.attribute_sensitivity:
            lines.append("")
            lines.append("attribute sensitivity (flagged share of "
                         "non-missing cells):")
            for attr, frac in self.attribute_sensitivity.items():
                lines.append(f"  {attr:<24} {frac:>8.2%}")
        return "\n".join(lines)

    def chart_rows(self) -> list[tuple[int, int, int, float]]:
        """Plot-ready series: cluster_id, records, modified, fraction."""
        return [(r.cluster, r.records, r.flagged, r.fraction)
                for r in self.clusters]


@dataclass
class ComparisonReport:
    """Pipeline output versus the column-dropping baseline."""

    pipeline_columns: list[str]
    baseline_columns: list[str]
    pipeline_reconstructable: int
    baseline_reconstructable: int = 0

    def to_json_dict(self) -> dict:
        return {
            "pipeline": {"columns_retained": len(self.pipeline_columns),
                         "columns": list(self.pipeline_columns),
                         "reconstructable_cells": self.pipeline_reconstructable},
            "baseline": {"columns_retained": len(self.baseline_columns),
                         "columns": list(self.baseline_columns),
                         "reconstructable_cells": self.baseline_reconstructable},
        }

    @classmethod
    def from_json_dict(cls, doc: Mapping) -> "ComparisonReport":
        return cls(pipeline_columns=list(doc["pipeline"]["columns"]),
                   baseline_columns=list(doc["baseline"]["columns"]),
                   pipeline_reconstructable=int(
                       doc["pipeline"]["reconstructable_cells"]),
                   baseline_reconstructable=int(
                       doc["baseline"]["reconstructable_cells"]))

    def render_text(self) -> str:
        return "\n".join([
            f"{'':<26}{'pipeline':>10} {'baseline':>10}",
            f"{'columns retained':<26}{len(self.pipeline_columns):>10} "
            f"{len(self.baseline_columns):>10}",
            f"{'reconstructable cells':<26}"
            f"{self.pipeline_reconstructable:>10} "
            f"{self.baseline_reconstructable:>10}",
        ])


def sanitize_baseline(table: DataTable, schema: Schema | None = None) -> DataTable:
    """The comparison baseline: drop every identifier, sensitive, and quasi
    column outright, keeping rows unchanged."""
    schema = schema or table.schema
    keep = [a.name for a in schema.attributes
            if a.role is AttributeRole.NON_SENSITIVE]
    return table.select_columns(keep)


def modification_report(mask: SensitivityMask, assignment: ClusterAssignment,
                        thresholds: Mapping[tuple[int, str], Threshold]
                        ) -> ModificationReport:
    """Aggregate the mask into per-cluster and per-attribute fractions."""
    record_flags = mask.record_flags
    n = mask.n_rows
    rows: list[ClusterReportRow] = []
    total_flagged = 0
    total_cells = 0
    for cluster in range(1, assignment.n_clusters + 1):
        records = assignment.records_in(cluster)
        flagged = int(record_flags[records].sum()) if records.size else 0
        cells = 0
        for attr in mask.monitored_attributes:
            cells += int(mask.cell_flags[attr][records].sum())
        size = int(records.size)
        rows.append(ClusterReportRow(
            cluster=cluster, records=size, flagged=flagged,
            modified_cells=cells,
            fraction=flagged / size if size else 0.0,
            thresholds={attr: thresholds[(cluster, attr)].median
                        for attr in mask.monitored_attributes
                        if (cluster, attr) in thresholds}))
        total_flagged += flagged
        total_cells += cells

    attribute_sensitivity: dict[str, float] = {}
    for attr in mask.monitored_attributes:
        present = int((~mask.cell_missing[attr]).sum())
        flagged_cells = int(mask.cell_flags[attr].sum())
        attribute_sensitivity[attr] = flagged_cells / present if present else 0.0

    return ModificationReport(
        clusters=rows, total_records=n, total_flagged=total_flagged,
        total_modified_cells=total_cells,
        overall_fraction=total_flagged / n if n else 0.0,
        attribute_sensitivity=attribute_sensitivity)


def compare_reports(pipeline_table: DataTable, metadata: TransformMetadata,
                    baseline_table: DataTable) -> ComparisonReport:
    """Tabulate column retention and reconstructable cells for the pipeline
    output against the baseline output."""
    if metadata.schema_fingerprint != pipeline_table.schema.fingerprint():
        raise FingerprintMismatchError(
            "metadata does not match the pipeline output's schema")
    if baseline_table.n_rows != pipeline_table.n_rows:
        raise FuzzanonError("baseline and pipeline outputs disagree on row "
                            "count; not derived from the same input")
    pipeline_names = pipeline_table.schema.names
    baseline_names = baseline_table.schema.names
    stray = [n for n in baseline_names if n not in pipeline_names]
    if stray:
        raise FuzzanonError(f"baseline columns {stray} do not appear in the "
                            "pipeline output; not derived from the same input")
    return ComparisonReport(
        pipeline_columns=pipeline_names,
        baseline_columns=baseline_names,
        pipeline_reconstructable=metadata.fuzzified_count(),
        baseline_reconstructable=0)


@dataclass
class PipelineResult:
    table: DataTable
    metadata: TransformMetadata
    report: ModificationReport
    comparison: ComparisonReport


@contextmanager
def _stage(name: str):
    try:
        yield
    except PipelineStageError:
        raise
    except Exception as exc:
        raise PipelineStageError(name, exc) from exc


def _suppress_identifiers(table: DataTable, schema: Schema,
                          default_token: str,
                          token_overrides: Mapping[str, str]
                          ) -> tuple[DataTable, list[LedgerEntry],
                                     dict[str, str]]:
    """Replace identifier cells with their token (text columns) or missing
    (numeric columns, which cannot hold a token)."""
    rows = [list(row) for row in table.rows]
    ledger: list[LedgerEntry] = []
    tokens: dict[str, str] = {}
    for attr in schema.identifier_names:
        col = schema.index_of(attr)
        a = schema.attribute(attr)
        token = _resolve_token(schema, attr, default_token, token_overrides)
        tokens[attr] = token
        for i, row in enumerate(rows):
            old = row[col]
            if old is None:
                continue
            new = None if a.is_numeric else token
            if new != old:
                row[col] = new
                ledger.append(LedgerEntry(i, attr, ACTION_SUPPRESSED))
    return DataTable(schema, rows), ledger, tokens


def run_pipeline(config: PipelineConfig) -> PipelineResult:
    """Execute load -> cluster -> distributions -> flag -> transform -> emit.

    Deterministic for a fixed config: two runs produce byte-identical
    files.  Output files are written only for the paths set in the config.
    """
    config.validate()
    for path, what in ((config.input_path, "input"),
                       (config.schema_path, "schema")):
        if not Path(path).is_file():
            raise ConfigError(f"{what} file not found: {path}")

    with _stage("load"):
        schema = load_schema(config.schema_path)
        table = load_csv(config.input_path, schema,
                         missing_markers=config.missing_markers)
        check_table(table, schema)
        if config.drop_identifiers:
            keep = [a.name for a in schema.attributes
                    if a.role is not AttributeRole.IDENTIFIER]
            table = table.select_columns(keep)
            schema = table.schema

    monitored = schema.monitored_names
    merges: list[MergeStep] = []
    distributions: dict = {}
    thresholds: dict = {}
    if monitored:
        with _stage("cluster"):
            features = feature_matrix(table, schema, config.features)
            assignment, merges = ward_cluster(features, config.k)
        with _stage("distributions"):
            distributions, thresholds = build_distributions(
                table, assignment, monitored, config.bins)
        with _stage("flag"):
            mask = flag_sensitive(table, assignment, distributions,
                                  thresholds, monitored, config.and_policy)
        with _stage("transform"):
            params = {}
            for attr in mask.numeric_attributes:
                for cluster, p in compute_fuzzy_params(
                        table, assignment, attr, allow_empty=True).items():
                    params[(cluster, attr)] = p
            modified, metadata = apply_transforms(
                table, schema, assignment, mask, params=params,
                default_token=config.default_token,
                token_overrides=config.tokens)
    else:
        # Nothing monitored: no feature space to cluster, nothing to flag.
        assignment = ClusterAssignment(
            1, np.ones(table.n_rows, dtype=np.int64), {1: table.n_rows})
        mask = flag_sensitive(table, assignment, {}, {}, [],
                              config.and_policy)
        with _stage("transform"):
            modified, metadata = apply_transforms(
                table, schema, assignment, mask, params={},
                default_token=config.default_token,
                token_overrides=config.tokens)

    with _stage("concat"):
        modified, id_ledger, id_tokens = _suppress_identifiers(
            modified, schema, config.default_token, config.tokens)
        metadata.ledger.extend(id_ledger)
        metadata.tokens.update(id_tokens)

        report = modification_report(mask, assignment, thresholds)
        report.parameters = config.to_json_dict()
        comparison = compare_reports(modified, metadata,
                                     sanitize_baseline(modified, schema))

    with _stage("emit"):
        if config.output_path:
            write_csv(modified, config.output_path)
            metadata_path = config.metadata_path or \
                f"{config.output_path}.meta.json"
            metadata.write(metadata_path)
            report_path = config.report_path or \
                f"{config.output_path}.report.json"
            write_report(report, comparison, report_path)
        if config.dendrogram_path:
            export_merge_steps(merges, config.dendrogram_path)
        if config.analysis_path:
            with open(config.analysis_path, "w", encoding="utf-8") as fh:
                json.dump(distributions_to_json(distributions, thresholds),
                          fh, sort_keys=True)
                fh.write("\n")

    return PipelineResult(table=modified, metadata=metadata, report=report,
                          comparison=comparison)


def write_report(report: ModificationReport, comparison: ComparisonReport,
                 path: str | Path) -> None:
    doc = report.to_json_dict()
    doc["comparison"] = comparison.to_json_dict()
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True)
        fh.write("\n")


def read_report(path: str | Path
                ) -> tuple[ModificationReport, ComparisonReport | None]:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    report = ModificationReport.from_json_dict(doc)
    comparison = None
    if "comparison" in doc:
        comparison = ComparisonReport.from_json_dict(doc["comparison"])
    return report, comparison
