"""Ward agglomerative clustering over standardized numeric features.

The linkage is built with the nearest-neighbor-chain algorithm, evaluating
cluster distances on the fly from centroids and sizes: O(n^2) time and
O(n*d) memory, so a full dendrogram fits in RAM even for tables with tens
of thousands of records (a materialized n x n distance matrix would not).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils import check_array

from fuzzanon.data import DataTable, Schema


@dataclass(frozen=True)
class MergeStep:
    """One dendrogram merge.

    Node ids follow the usual convention: leaves are 0..n-1, the cluster
    created by step i is n+i.  ``cost`` is the increase in within-cluster
    sum of squares caused by the merge.
    """

    left: int
    right: int
    merged: int
    cost: float


@dataclass
class ClusterAssignment:
    """A flat partition of records into clusters labeled 1..k."""

    n_clusters: int
    labels: np.ndarray
    sizes: dict[int, int]

    def records_in(self, cluster: int) -> np.ndarray:
        return np.flatnonzero(self.labels == cluster)


def feature_matrix(table: DataTable, schema: Schema | None = None,
                   selection: Sequence[str] | None = None) -> np.ndarray:
    """Build the standardized clustering feature matrix.

    Defaults to all numeric sensitive/quasi columns.  Each column is
    z-scored with the population standard deviation; missing cells are
    imputed with the column mean (z = 0) and constant columns map to all
    zeros, so the result never contains NaN.
    """
    schema = schema or table.schema
    names = list(selection) if selection else schema.monitored_numeric
    if not names:
        raise ValueError("no numeric attributes available for clustering")
    for name in names:
        if not schema.attribute(name).is_numeric:
            raise ValueError(f"attribute {name!r} is not numeric")

    n = table.n_rows
    out = np.zeros((n, len(names)), dtype=np.float64)
    for j, name in enumerate(names):
        col = np.array([v if isinstance(v, float) else np.nan
                        for v in table.column(name)], dtype=np.float64)
        present = ~np.isnan(col)
        if not present.any():
            continue  # all-missing column: leave as zeros
        mean = col[present].mean()
        sigma = np.sqrt(np.mean((col[present] - mean) ** 2))
        if sigma == 0.0:
            continue  # constant column: leave as zeros
        z = (col - mean) / sigma
        z[~present] = 0.0
        out[:, j] = z
    return out


def ward_linkage(features: np.ndarray) -> list[MergeStep]:
    """Full Ward dendrogram of the rows of ``features``.

    Nearest-neighbor chain over (centroid, size) cluster summaries; the
    chain's merges are then sorted by cost and relabeled into a stepwise
    dendrogram.  Ties in the nearest-neighbor scan resolve to the smallest
    active slot, which makes the output deterministic.
    """
    X = np.asarray(features, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("feature matrix must be 2-dimensional")
    n = X.shape[0]
    if n == 0:
        raise ValueError("empty feature matrix")
    if n == 1:
        return []

    centroid = X.copy()
    size = np.ones(n, dtype=np.float64)
    alive = np.ones(n, dtype=bool)
    # Raw merges as (slot_a, slot_b, cost); a slot is the leaf index whose
    # array row currently holds the cluster.
    raw: list[tuple[int, int, float]] = []
    chain: list[int] = []

    while len(raw) < n - 1:
        if not chain:
            chain.append(int(np.argmax(alive)))
        x = chain[-1]
        diff = centroid - centroid[x]
        cost = (size[x] * size / (size[x] + size)) * np.einsum(
            "ij,ij->i", diff, diff)
        cost[x] = np.inf
        cost[~alive] = np.inf
        y = int(np.argmin(cost))
        best = cost[y]
        if len(chain) > 1 and cost[chain[-2]] <= best:
            y, best = chain[-2], float(cost[chain[-2]])
        if len(chain) > 1 and y == chain[-2]:
            chain.pop()
            chain.pop()
            raw.append((x, y, float(best)))
            keep, drop = (x, y) if x < y else (y, x)
            total = size[x] + size[y]
            centroid[keep] = (size[x] * centroid[x] + size[y] * centroid[y]) / total
            size[keep] = total
            alive[drop] = False
        else:
            chain.append(y)

    # Reducibility of the Ward criterion makes the cost-sorted merge list a
    # valid stepwise dendrogram; union-find assigns the final node ids.
    order = sorted(range(n - 1), key=lambda i: raw[i][2])
    parent = list(range(n))
    node = list(range(n))

    def find(i: int) -> int:
        root = i
        while parent[root] != root:
            root = parent[root]
        while parent[i] != root:
            parent[i], i = root, parent[i]
        return root

    steps: list[MergeStep] = []
    for step_index, raw_index in enumerate(order):
        a, b, cost = raw[raw_index]
        ra, rb = find(a), find(b)
        na, nb = node[ra], node[rb]
        parent[ra] = rb
        node[rb] = n + step_index
        steps.append(MergeStep(min(na, nb), max(na, nb), n + step_index, cost))
    return steps


def cut_dendrogram(merges: Sequence[MergeStep], n: int, k: int) -> ClusterAssignment:
    """Cut a dendrogram into k clusters by undoing the last k-1 merges.

    Clusters are relabeled 1..k in order of their smallest member record.
    """
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    if len(merges) != n - 1:
        raise ValueError(f"malformed merge history: expected {n - 1} steps, "
                         f"got {len(merges)}")
    parent = list(range(2 * n - 1)) if n > 0 else []

    def find(i: int) -> int:
        root = i
        while parent[root] != root:
            root = parent[root]
        while parent[i] != root:
            parent[i], i = root, parent[i]
        return root

    seen_children: set[int] = set()
    for i, step in enumerate(merges):
        merged = n + i
        if step.merged != merged:
            raise ValueError(f"malformed merge history: step {i} creates node "
                             f"{step.merged}, expected {merged}")
        if not (0 <= step.left < step.right < merged):
            raise ValueError(f"malformed merge history: step {i} merges "
                             f"({step.left}, {step.right})")
        if step.left in seen_children or step.right in seen_children:
            raise ValueError(f"malformed merge history: step {i} reuses a "
                             "merged cluster")
        seen_children.update((step.left, step.right))
        if i < n - k:
            parent[step.left] = merged
            parent[step.right] = merged

    labels = np.zeros(n, dtype=np.int64)
    relabel: dict[int, int] = {}
    for record in range(n):
        root = find(record)
        if root not in relabel:
            relabel[root] = len(relabel) + 1
        labels[record] = relabel[root]
    sizes = {c: int(np.sum(labels == c)) for c in range(1, len(relabel) + 1)}
    return ClusterAssignment(n_clusters=len(relabel), labels=labels, sizes=sizes)


def ward_cluster(features: np.ndarray, k: int) -> tuple[ClusterAssignment, list[MergeStep]]:
    """Ward-cluster feature rows into k groups; also returns the dendrogram."""
    X = np.asarray(features, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("feature matrix must be 2-dimensional")
    n = X.shape[0]
    if n == 0:
        raise ValueError("empty feature matrix")
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    merges = ward_linkage(X)
    return cut_dendrogram(merges, n, k), merges


def merge_steps_to_json(merges: Sequence[MergeStep]) -> list[dict]:
    return [{"left": m.left, "right": m.right, "merged": m.merged,
             "cost": m.cost} for m in merges]


def export_merge_steps(merges: Sequence[MergeStep], path: str | Path) -> None:
    """Write the dendrogram as a JSON array for external inspection."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(merge_steps_to_json(merges), fh, sort_keys=True)
        fh.write("\n")


class WardClustering(BaseEstimator):
    """Ward agglomerative clustering with the scikit-learn estimator API.

    Attributes after fit:
        labels_: per-record cluster ids in 1..n_clusters
        assignment_: the ClusterAssignment
        merge_steps_: full dendrogram as MergeStep records
    """

    def __init__(self, n_clusters: int = 5):
        self.n_clusters = n_clusters

    def fit(self, X, y=None) -> "WardClustering":
        X = check_array(X, dtype=np.float64)
        assignment, merges = ward_cluster(X, self.n_clusters)
        self.assignment_ = assignment
        self.merge_steps_ = merges
        self.labels_ = assignment.labels
        return self

    def fit_predict(self, X, y=None) -> np.ndarray:
        return self.fit(X).labels_
