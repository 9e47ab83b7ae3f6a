"""Per-cluster class-probability distributions, median thresholds, and the
conjunction rule that decides which cells are sensitive."""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from fuzzanon.clustering import ClusterAssignment
from fuzzanon.data import DataTable
from fuzzanon.errors import FuzzanonError

POLICY_UNIVERSAL = "universal"
POLICY_PAIRWISE = "pairwise"


@dataclass(frozen=True)
class BinSpec:
    """Contiguous equal-width classes over a value range.

    Each class spans [lcl, ucl); the final class also includes its upper
    limit so the covered range is closed.
    """

    bins: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        if not self.bins:
            raise ValueError("at least one bin required")

    @property
    def n_bins(self) -> int:
        return len(self.bins)

    def index_of(self, value: float) -> int:
        """Class index for a value; values outside the range clamp to the
        nearest end bin."""
        lo = self.bins[0][0]
        hi = self.bins[-1][1]
        if value <= lo:
            return 0
        if value >= hi:
            return self.n_bins - 1
        i = min(int((value - lo) / (hi - lo) * self.n_bins), self.n_bins - 1)
        # Float rounding can land the arithmetic guess one bin off; settle
        # against the stored limits so [lcl, ucl) semantics hold exactly.
        while i > 0 and value < self.bins[i][0]:
            i -= 1
        while i < self.n_bins - 1 and value >= self.bins[i][1]:
            i += 1
        return i


def bin_numeric(values: Sequence[float], rule: int | str = "sturges") -> BinSpec:
    """Equal-width bins over [min, max] of the values.

    The default bin count is the Sturges rule ceil(1 + log2(n)); pass an
    integer to fix the count. A single distinct value yields one
    degenerate bin [v, v].
    """
    if len(values) == 0:
        raise ValueError("cannot bin an empty value list")
    lo, hi = min(values), max(values)
    if lo == hi:
        return BinSpec(((lo, hi),))
    if rule == "sturges":
        count = math.ceil(1 + math.log2(len(values)))
    elif isinstance(rule, int) and not isinstance(rule, bool) and rule >= 1:
        count = rule
    else:
        raise ValueError(f"bin rule must be 'sturges' or a positive integer, "
                         f"got {rule!r}")
    width = (hi - lo) / count
    edges = [lo + i * width for i in range(count)] + [hi]
    return BinSpec(tuple((edges[i], edges[i + 1]) for i in range(count)))


@dataclass(frozen=True)
class FrequencyDistribution:
    """Class probabilities of one attribute within one cluster.

    ``classes`` are bin indices for numeric attributes (every bin appears,
    including empty ones) or the distinct category labels for categorical
    attributes.  Probabilities are count / total where total is the
    cluster's non-missing count.
    """

    cluster: int
    attribute: str
    kind: str
    classes: tuple
    counts: tuple[int, ...]
    probabilities: tuple[float, ...]
    total: int
    bins: BinSpec | None = None

    def probability_of(self, value) -> float:
        """Class probability of the class the given cell value falls in."""
        if self.kind == "numeric":
            assert self.bins is not None
            return self.probabilities[self.bins.index_of(value)]
        try:
            return self.probabilities[self.classes.index(value)]
        except ValueError:
            return 0.0


@dataclass(frozen=True)
class Threshold:
    """Median of a distribution's class probabilities (the privacy cutoff)."""

    cluster: int
    attribute: str
    median: float


def _cluster_values(table: DataTable, assignment: ClusterAssignment,
                    cluster: int, attr: str) -> list:
    records = assignment.records_in(cluster)
    if records.size == 0:
        raise ValueError(f"cluster {cluster} is empty")
    col = table.schema.index_of(attr)
    values = [table.rows[r][col] for r in records]
    present = [v for v in values if v is not None]
    if not present:
        raise ValueError(f"cluster {cluster} has no values for "
                         f"attribute {attr!r}")
    return present


def class_probabilities(table: DataTable, assignment: ClusterAssignment,
                        cluster: int, attr: str,
                        bins: BinSpec) -> FrequencyDistribution:
    """Binned class probabilities of a numeric attribute within a cluster."""
    if not table.schema.attribute(attr).is_numeric:
        raise ValueError(f"attribute {attr!r} is not numeric")
    values = _cluster_values(table, assignment, cluster, attr)
    counts = [0] * bins.n_bins
    for v in values:
        counts[bins.index_of(v)] += 1
    total = len(values)
    return FrequencyDistribution(
        cluster=cluster, attribute=attr, kind="numeric",
        classes=tuple(range(bins.n_bins)), counts=tuple(counts),
        probabilities=tuple(c / total for c in counts), total=total,
        bins=bins)


def categorical_probabilities(table: DataTable, assignment: ClusterAssignment,
                              cluster: int, attr: str) -> FrequencyDistribution:
    """Category probabilities of a categorical attribute within a cluster."""
    if table.schema.attribute(attr).is_numeric:
        raise ValueError(f"attribute {attr!r} is not categorical")
    values = _cluster_values(table, assignment, cluster, attr)
    counts: dict[str, int] = {}
    for v in values:
        counts[v] = counts.get(v, 0) + 1
    total = len(values)
    labels = tuple(sorted(counts))
    return FrequencyDistribution(
        cluster=cluster, attribute=attr, kind="categorical",
        classes=labels, counts=tuple(counts[c] for c in labels),
        probabilities=tuple(counts[c] / total for c in labels), total=total)


def median_threshold(dist: FrequencyDistribution) -> Threshold:
    """Median of the distribution's class probabilities; an even count takes
    the mean of the two middle values."""
    if not dist.probabilities:
        raise ValueError("empty distribution")
    return Threshold(cluster=dist.cluster, attribute=dist.attribute,
                     median=statistics.median(dist.probabilities))


@dataclass
class SensitivityMask:
    """Flag state of every monitored cell.

    Cells split four ways: flagged numeric, unflagged numeric, flagged
    categorical, unflagged categorical.  Missing cells belong to none of
    them and are never flagged.
    """

    numeric_attributes: tuple[str, ...]
    categorical_attributes: tuple[str, ...]
    cell_flags: dict[str, np.ndarray]
    cell_missing: dict[str, np.ndarray]
    n_rows: int

    @property
    def monitored_attributes(self) -> tuple[str, ...]:
        return self.numeric_attributes + self.categorical_attributes

    @property
    def record_flags(self) -> np.ndarray:
        """True for records with at least one flagged cell."""
        flags = np.zeros(self.n_rows, dtype=bool)
        for attr_flags in self.cell_flags.values():
            flags |= attr_flags
        return flags

    def is_flagged(self, row: int, attr: str) -> bool:
        return bool(self.cell_flags[attr][row])

    def _cells(self, attrs: Sequence[str], flagged: bool) -> list[tuple[int, str]]:
        out = []
        for row in range(self.n_rows):
            for attr in attrs:
                if self.cell_missing[attr][row]:
                    continue
                if bool(self.cell_flags[attr][row]) == flagged:
                    out.append((row, attr))
        return out

    def flagged_numeric_cells(self) -> list[tuple[int, str]]:
        return self._cells(self.numeric_attributes, True)

    def unflagged_numeric_cells(self) -> list[tuple[int, str]]:
        return self._cells(self.numeric_attributes, False)

    def flagged_categorical_cells(self) -> list[tuple[int, str]]:
        return self._cells(self.categorical_attributes, True)

    def unflagged_categorical_cells(self) -> list[tuple[int, str]]:
        return self._cells(self.categorical_attributes, False)

    def flagged_cell_count(self) -> int:
        return int(sum(f.sum() for f in self.cell_flags.values()))


def flag_sensitive(table: DataTable, assignment: ClusterAssignment,
                   distributions: Mapping[tuple[int, str], FrequencyDistribution],
                   thresholds: Mapping[tuple[int, str], Threshold],
                   monitored: Sequence[str],
                   policy: str = POLICY_UNIVERSAL) -> SensitivityMask:
    """Decide which monitored cells are sensitive.

    Under the default ``universal`` policy a record is flagged only when
    its cell meets the cluster threshold on *every* monitored attribute
    (a missing cell fails that test), and all the record's monitored cells
    are flagged together.  Under ``pairwise`` each cell is flagged
    independently against its own attribute's threshold.
    """
    if policy not in (POLICY_UNIVERSAL, POLICY_PAIRWISE):
        raise ValueError(f"unknown and-policy {policy!r}")
    schema = table.schema
    n = table.n_rows
    numeric = tuple(a for a in monitored if schema.attribute(a).is_numeric)
    categorical = tuple(a for a in monitored
                        if not schema.attribute(a).is_numeric)

    passes: dict[str, np.ndarray] = {}
    missing: dict[str, np.ndarray] = {}
    for attr in monitored:
        col = table.column(attr)
        attr_pass = np.zeros(n, dtype=bool)
        attr_missing = np.zeros(n, dtype=bool)
        for row, cell in enumerate(col):
            if cell is None:
                attr_missing[row] = True
                continue
            cluster = int(assignment.labels[row])
            key = (cluster, attr)
            if key not in distributions or key not in thresholds:
                raise FuzzanonError(
                    f"no distribution/threshold for cluster {cluster}, "
                    f"attribute {attr!r}")
            prob = distributions[key].probability_of(cell)
            attr_pass[row] = prob >= thresholds[key].median
        passes[attr] = attr_pass
        missing[attr] = attr_missing

    flags: dict[str, np.ndarray] = {}
    if policy == POLICY_UNIVERSAL:
        if monitored:
            record = np.ones(n, dtype=bool)
            for attr in monitored:
                record &= passes[attr] & ~missing[attr]
        else:
            record = np.zeros(n, dtype=bool)
        for attr in monitored:
            flags[attr] = record & ~missing[attr]
    else:
        for attr in monitored:
            flags[attr] = passes[attr] & ~missing[attr]

    return SensitivityMask(
        numeric_attributes=numeric, categorical_attributes=categorical,
        cell_flags=flags, cell_missing=missing, n_rows=n)


def distributions_to_json(
        distributions: Mapping[tuple[int, str], FrequencyDistribution],
        thresholds: Mapping[tuple[int, str], Threshold]) -> list[dict]:
    """Analysis export: one record per (cluster, attribute) pair."""
    out = []
    for (cluster, attr) in sorted(distributions):
        dist = distributions[(cluster, attr)]
        entry: dict = {
            "cluster": cluster,
            "attribute": attr,
            "kind": dist.kind,
            "classes": [
                {"class": c, "count": n, "probability": p}
                for c, n, p in zip(dist.classes, dist.counts,
                                   dist.probabilities)
            ],
            "total": dist.total,
            "threshold": thresholds[(cluster, attr)].median,
        }
        if dist.bins is not None:
            entry["bins"] = [list(b) for b in dist.bins.bins]
        out.append(entry)
    return out
