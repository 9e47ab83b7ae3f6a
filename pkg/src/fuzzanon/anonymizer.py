"""High-level anonymization estimator with the scikit-learn fit/transform API."""

from __future__ import annotations

from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from fuzzanon.clustering import ClusterAssignment, feature_matrix, ward_cluster
from fuzzanon.data import DataTable, Schema, validate_schema
from fuzzanon.errors import DataFormatError
from fuzzanon.sensitivity import (FrequencyDistribution, Threshold,
                                  bin_numeric, categorical_probabilities,
                                  class_probabilities, flag_sensitive,
                                  median_threshold)
from fuzzanon.transforms import (DEFAULT_TOKEN, TransformMetadata,
                                 apply_transforms, compute_fuzzy_params,
                                 reconstruct)


def check_table(table: DataTable, schema: Schema | None = None) -> None:
    """Raise if the table's cells do not conform to the schema's types."""
    problems = [v for v in validate_schema(table, schema)
                if v.category in ("type", "shape")]
    if problems:
        shown = "; ".join(str(v) for v in problems[:5])
        more = f" (+{len(problems) - 5} more)" if len(problems) > 5 else ""
        raise DataFormatError(f"table does not conform to schema: {shown}{more}")


def build_distributions(table: DataTable, assignment: ClusterAssignment,
                        monitored: Sequence[str], bins: int | str = "sturges"
                        ) -> tuple[dict[tuple[int, str], FrequencyDistribution],
                                   dict[tuple[int, str], Threshold]]:
    """Class-probability distributions and median thresholds for every
    (cluster, monitored attribute) pair that has data."""
    schema = table.schema
    distributions: dict[tuple[int, str], FrequencyDistribution] = {}
    thresholds: dict[tuple[int, str], Threshold] = {}
    for attr in monitored:
        numeric = schema.attribute(attr).is_numeric
        col = schema.index_of(attr)
        for cluster in range(1, assignment.n_clusters + 1):
            values = [table.rows[r][col]
                      for r in assignment.records_in(cluster)]
            present = [v for v in values if v is not None]
            if not present:
                continue  # all-missing: no cell here can be flagged
            if numeric:
                dist = class_probabilities(table, assignment, cluster, attr,
                                           bin_numeric(present, bins))
            else:
                dist = categorical_probabilities(table, assignment, cluster,
                                                 attr)
            distributions[(cluster, attr)] = dist
            thresholds[(cluster, attr)] = median_threshold(dist)
    return distributions, thresholds


class FuzzyAnonymizer(BaseEstimator):
    """Cluster records, detect sensitive cells, fuzzify/suppress them.

    fit() clusters the table on its numeric sensitive/quasi columns,
    derives per-cluster class probabilities and median thresholds, and
    decides which cells are sensitive.  transform() applies the value
    transforms to the fitted table and records reconstruction metadata;
    inverse_transform() recovers the fuzzified values from it.

    Parameters
    ----------
    n_clusters : cluster count for the dendrogram cut.
    bins : "sturges" or a fixed bin count for numeric class ranges.
    and_policy : "universal" (flag a record only when every monitored
        attribute passes its threshold) or "pairwise" (flag each cell
        independently).
    features : optional list of numeric attributes to cluster on; defaults
        to all numeric sensitive/quasi attributes.
    default_token : suppression token for attributes without their own.
    """

    def __init__(self, n_clusters: int = 5, bins: int | str = "sturges",
                 and_policy: str = "universal",
                 features: Sequence[str] | None = None,
                 default_token: str = DEFAULT_TOKEN):
        self.n_clusters = n_clusters
        self.bins = bins
        self.and_policy = and_policy
        self.features = features
        self.default_token = default_token

    def fit(self, table: DataTable, y=None) -> "FuzzyAnonymizer":
        check_table(table)
        schema = table.schema
        monitored = schema.monitored_names
        n = table.n_rows

        if not monitored:
            # Nothing to protect: a single trivial cluster, empty mask.
            labels = np.ones(n, dtype=np.int64)
            self.assignment_ = ClusterAssignment(1, labels, {1: n})
            self.merge_steps_ = []
            self.distributions_ = {}
            self.thresholds_ = {}
            self.mask_ = flag_sensitive(table, self.assignment_, {}, {}, [],
                                        self.and_policy)
            self.params_ = {}
        else:
            X = feature_matrix(table, schema, self.features)
            self.assignment_, self.merge_steps_ = ward_cluster(
                X, self.n_clusters)
            self.distributions_, self.thresholds_ = build_distributions(
                table, self.assignment_, monitored, self.bins)
            self.mask_ = flag_sensitive(table, self.assignment_,
                                        self.distributions_, self.thresholds_,
                                        monitored, self.and_policy)
            self.params_ = {}
            for attr in self.mask_.numeric_attributes:
                for cluster, p in compute_fuzzy_params(
                        table, self.assignment_, attr,
                        allow_empty=True).items():
                    self.params_[(cluster, attr)] = p

        self.n_rows_ = n
        self.schema_fingerprint_ = schema.fingerprint()
        return self

    def _check_fitted(self) -> None:
        if not hasattr(self, "mask_"):
            raise NotFittedError("this FuzzyAnonymizer is not fitted yet; "
                                 "call fit first")

    def _check_same_table(self, table: DataTable) -> None:
        if (table.schema.fingerprint() != self.schema_fingerprint_
                or table.n_rows != self.n_rows_):
            raise ValueError("transform must be applied to the table the "
                             "estimator was fitted on")

    def transform(self, table: DataTable) -> DataTable:
        """Anonymize the fitted table; reconstruction metadata lands in
        ``metadata_``."""
        self._check_fitted()
        self._check_same_table(table)
        modified, metadata = apply_transforms(
            table, table.schema, self.assignment_, self.mask_,
            params=self.params_, default_token=self.default_token)
        self.metadata_ = metadata
        return modified

    def fit_transform(self, table: DataTable, y=None) -> DataTable:
        return self.fit(table).transform(table)

    def inverse_transform(self, table: DataTable,
                          metadata: TransformMetadata | None = None
                          ) -> DataTable:
        """Recover fuzzified cells from the metadata of the last transform
        (or an explicitly supplied sidecar)."""
        if metadata is None:
            self._check_fitted()
            if not hasattr(self, "metadata_"):
                raise NotFittedError("transform has not been called; no "
                                     "metadata to invert with")
            metadata = self.metadata_
        return reconstruct(table, metadata)
