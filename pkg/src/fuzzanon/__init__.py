"""fuzzanon: cluster-based anonymization of tabular data with reversible
S-shape fuzzification of numeric values and suppression/generalization of
categorical values."""

from fuzzanon.anonymizer import FuzzyAnonymizer, build_distributions, check_table
from fuzzanon.clustering import (ClusterAssignment, MergeStep, WardClustering,
                                 cut_dendrogram, feature_matrix, ward_cluster,
                                 ward_linkage)
from fuzzanon.data import (Attribute, AttributeRole, Cell, ColumnStats,
                           DataTable, Schema, Violation, column_stats,
                           load_csv, load_schema, validate_schema, write_csv,
                           write_schema)
from fuzzanon.errors import (ConfigError, DataFormatError,
                             FingerprintMismatchError, FuzzanonError,
                             PipelineStageError, SchemaMismatchError)
from fuzzanon.pipeline import (ComparisonReport, ModificationReport,
                               PipelineConfig, PipelineResult, compare_reports,
                               modification_report, run_pipeline,
                               sanitize_baseline)
from fuzzanon.sensitivity import (BinSpec, FrequencyDistribution,
                                  SensitivityMask, Threshold, bin_numeric,
                                  categorical_probabilities,
                                  class_probabilities, flag_sensitive,
                                  median_threshold)
from fuzzanon.transforms import (FuzzyParams, LedgerEntry, TransformMetadata,
                                 apply_transforms, compute_fuzzy_params,
                                 generalize, inverse_s, reconstruct,
                                 s_membership, suppress)

__version__ = "0.1.0"

__all__ = [
    "Attribute", "AttributeRole", "BinSpec", "Cell", "ClusterAssignment",
    "ColumnStats", "ComparisonReport", "ConfigError", "DataFormatError",
    "DataTable", "FingerprintMismatchError", "FrequencyDistribution",
    "FuzzanonError", "FuzzyAnonymizer", "FuzzyParams", "LedgerEntry",
    "MergeStep", "ModificationReport", "PipelineConfig", "PipelineResult",
    "PipelineStageError", "Schema", "SchemaMismatchError", "SensitivityMask",
    "Threshold", "TransformMetadata", "Violation", "WardClustering",
    "apply_transforms", "bin_numeric", "build_distributions",
    "categorical_probabilities", "check_table", "class_probabilities",
    "column_stats", "compare_reports", "compute_fuzzy_params",
    "cut_dendrogram", "feature_matrix", "flag_sensitive", "generalize",
    "inverse_s", "load_csv", "load_schema", "median_threshold",
    "modification_report", "reconstruct", "run_pipeline", "s_membership",
    "sanitize_baseline", "suppress", "validate_schema", "ward_cluster",
    "ward_linkage", "write_csv", "write_schema",
]
