"""Independent brute-force oracles used to freeze expected test values.

Everything here recomputes results from first principles (exhaustive
search, direct counting, closed-form algebra) without touching the
implementation under test, so the two sides stay independent.
"""

from __future__ import annotations

import math
from itertools import combinations

import numpy as np


def partition_of(labels) -> frozenset[frozenset[int]]:
    """Turn a label vector into a canonical partition of record indices."""
    groups: dict[int, set[int]] = {}
    for i, label in enumerate(labels):
        groups.setdefault(int(label), set()).add(i)
    return frozenset(frozenset(g) for g in groups.values())


def sse(X: np.ndarray, members) -> float:
    """Within-cluster sum of squares of one cluster, from scratch."""
    pts = X[sorted(members)]
    return float(((pts - pts.mean(axis=0)) ** 2).sum())


def wss(X: np.ndarray, partition) -> float:
    return sum(sse(X, members) for members in partition)


def greedy_ward_partitions(X: np.ndarray, tol: float = 1e-12
                           ) -> dict[int, set[frozenset[frozenset[int]]]]:
    """All partitions reachable by greedy Ward merging, per cluster count.

    At every step any pair whose merge cost ties the minimum (within tol)
    may be chosen; the result maps k to the set of reachable partitions.
    Exponential in the worst case, so only for small n.
    """
    n = X.shape[0]
    start = frozenset(frozenset({i}) for i in range(n))
    reachable: dict[int, set] = {n: {start}}
    frontier = {start}
    for k in range(n - 1, 0, -1):
        nxt = set()
        for partition in frontier:
            clusters = sorted(partition, key=sorted)
            costs = {}
            for a, b in combinations(clusters, 2):
                costs[(a, b)] = sse(X, a | b) - sse(X, a) - sse(X, b)
            best = min(costs.values())
            for (a, b), cost in costs.items():
                if cost <= best + tol:
                    merged = (partition - {a, b}) | {a | b}
                    nxt.add(merged)
        reachable[k] = nxt
        frontier = nxt
    return reachable


def best_two_partition(X: np.ndarray) -> frozenset[frozenset[int]]:
    """Exhaustively minimize WSS over all 2-partitions."""
    n = X.shape[0]
    indices = list(range(n))
    best = None
    best_cost = math.inf
    for size in range(1, n // 2 + 1):
        for side in combinations(indices, size):
            a = frozenset(side)
            b = frozenset(indices) - a
            cost = sse(X, a) + sse(X, b)
            if cost < best_cost:
                best_cost = cost
                best = frozenset({a, b})
    return best


def brute_bin_counts(values, bins) -> list[int]:
    """Count values per class by direct [lcl, ucl) comparison (last class
    closed), independent of any index arithmetic."""
    counts = [0] * len(bins)
    last = len(bins) - 1
    for v in values:
        for i, (lcl, ucl) in enumerate(bins):
            if i == last:
                if lcl <= v <= ucl:
                    counts[i] += 1
                    break
            elif lcl <= v < ucl:
                counts[i] += 1
                break
        else:
            raise AssertionError(f"value {v} not covered by bins")
    return counts


def brute_median(values) -> float:
    """Median by sort: odd takes the middle, even averages the two middles."""
    ordered = sorted(values)
    n = len(ordered)
    if n % 2 == 1:
        return ordered[n // 2]
    return (ordered[n // 2 - 1] + ordered[n // 2]) / 2


def solve_s_params(a1: float, s1: float, a2: float, s2: float
                   ) -> tuple[float, float]:
    """Fit (beta, gamma) from two lower-branch points of the S curve.

    On the lower branch s = 2*((a - beta)/(gamma - beta))^2, so
    a = beta + (gamma - beta) * sqrt(s / 2); two points give a linear
    system in beta and the span.
    """
    r1 = math.sqrt(s1 / 2.0)
    r2 = math.sqrt(s2 / 2.0)
    span = (a2 - a1) / (r2 - r1)
    beta = a1 - span * r1
    return beta, beta + span
