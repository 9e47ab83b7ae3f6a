"""Value transforms: S-shape fuzzification of numeric cells, suppression and
generalization of categorical cells, and the metadata sidecar that makes
fuzzified cells reconstructable."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from fuzzanon.clustering import ClusterAssignment
from fuzzanon.data import Cell, DataTable, Schema
from fuzzanon.errors import (DataFormatError, FingerprintMismatchError,
                             FuzzanonError)
from fuzzanon.sensitivity import SensitivityMask

ACTION_FUZZIFIED = "fuzzified"
ACTION_SUPPRESSED = "suppressed"
ACTION_GENERALIZED = "generalized"

DEFAULT_TOKEN = "Unknown"


def s_membership(alpha: float, beta: float, gamma: float) -> float:
    """S-shaped membership degree of ``alpha`` over the range [beta, gamma].

    Piecewise quadratic: 0 at or below beta, 2*((a-b)/(g-b))^2 on the lower
    half, 1 - 2*((a-g)/(g-b))^2 on the upper half, 1 at or above gamma.
    Monotone, continuous, and always in [0, 1].
    """
    if beta > gamma:
        raise ValueError(f"beta ({beta}) must not exceed gamma ({gamma})")
    if beta == gamma:
        # Degenerate range: the quotient is singular, so pin the midpoint.
        if alpha < beta:
            return 0.0
        if alpha > beta:
            return 1.0
        return 0.5
    if alpha <= beta:
        return 0.0
    if alpha >= gamma:
        return 1.0
    mid = 0.5 * (beta + gamma)
    if alpha == mid:
        # The two quadratic halves agree here only to ~1 ulp; pin it.
        return 0.5
    span = gamma - beta
    if alpha < mid:
        t = (alpha - beta) / span
        return 2.0 * t * t
    t = (alpha - gamma) / span
    return 1.0 - 2.0 * t * t


def inverse_s(s: float, beta: float, gamma: float) -> float:
    """Invert :func:`s_membership` over [beta, gamma]."""
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"membership degree must be in [0, 1], got {s}")
    if beta > gamma:
        raise ValueError(f"beta ({beta}) must not exceed gamma ({gamma})")
    if beta == gamma:
        return beta
    if s == 0.5:
        return 0.5 * (beta + gamma)
    span = gamma - beta
    if s < 0.5:
        return beta + span * math.sqrt(s / 2.0)
    return gamma - span * math.sqrt((1.0 - s) / 2.0)


def suppress(value: Cell, token: str) -> Cell:
    """Replace a text value with the suppression token; missing stays missing."""
    if value is None:
        return None
    if isinstance(value, str):
        return token
    raise TypeError(f"suppress applies to text or missing cells, got {value!r}")


def generalize(value: Cell, hierarchy: Mapping[str, str],
               fallback: str) -> Cell:
    """Map a text value to its coarser label, or the fallback token when the
    hierarchy does not cover it."""
    if not isinstance(value, str):
        raise TypeError(f"generalize applies to text cells, got {value!r}")
    return hierarchy.get(value, fallback)


@dataclass(frozen=True)
class FuzzyParams:
    """Per-cluster fuzzification range: the cluster's min and max of one
    attribute over non-missing values."""

    cluster: int
    attribute: str
    beta: float
    gamma: float

    def __post_init__(self) -> None:
        if self.beta > self.gamma:
            raise ValueError(f"beta ({self.beta}) must not exceed gamma "
                             f"({self.gamma})")


def compute_fuzzy_params(table: DataTable, assignment: ClusterAssignment,
                         attr: str, allow_empty: bool = False
                         ) -> dict[int, FuzzyParams]:
    """Min/max of one numeric attribute per cluster.

    A cluster with no non-missing values raises unless ``allow_empty`` is
    set, in which case it is omitted (no cell there can need the params).
    """
    if not table.schema.attribute(attr).is_numeric:
        raise ValueError(f"attribute {attr!r} is not numeric")
    col = table.schema.index_of(attr)
    out: dict[int, FuzzyParams] = {}
    for cluster in range(1, assignment.n_clusters + 1):
        values = [table.rows[r][col] for r in assignment.records_in(cluster)]
        present = [v for v in values if v is not None]
        if not present:
            if allow_empty:
                continue
            raise ValueError(f"cluster {cluster} has no values for "
                             f"attribute {attr!r}")
        out[cluster] = FuzzyParams(cluster, attr, min(present), max(present))
    return out


@dataclass(frozen=True)
class LedgerEntry:
    """One modified cell: where, and what was done to it."""

    row: int
    attribute: str
    action: str

    @property
    def recoverable(self) -> bool:
        return self.action == ACTION_FUZZIFIED


@dataclass
class TransformMetadata:
    """Sidecar enabling reconstruction of fuzzified cells.

    Serialized as JSON next to the output CSV: schema fingerprint, cluster
    labels, per-(cluster, attribute) fuzzification ranges, the ledger of
    modified cells, and the suppression tokens used.
    """

    schema_fingerprint: str
    n_clusters: int
    labels: list[int]
    params: dict[tuple[int, str], FuzzyParams]
    ledger: list[LedgerEntry]
    tokens: dict[str, str] = field(default_factory=dict)

    def action_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for entry in self.ledger:
            counts[entry.action] = counts.get(entry.action, 0) + 1
        return counts

    def fuzzified_count(self) -> int:
        return self.action_counts().get(ACTION_FUZZIFIED, 0)

    def to_json_dict(self) -> dict:
        return {
            "schema_fingerprint": self.schema_fingerprint,
            "k": self.n_clusters,
            "labels": list(self.labels),
            "params": [
                {"cluster": p.cluster, "attr": p.attribute,
                 "beta": p.beta, "gamma": p.gamma}
                for p in (self.params[k] for k in sorted(self.params))
            ],
            "ledger": [
                {"row": e.row, "attr": e.attribute, "action": e.action}
                for e in self.ledger
            ],
            "tokens": dict(self.tokens),
        }

    @classmethod
    def from_json_dict(cls, doc: Mapping) -> "TransformMetadata":
        try:
            params = {
                (int(p["cluster"]), p["attr"]): FuzzyParams(
                    int(p["cluster"]), p["attr"],
                    float(p["beta"]), float(p["gamma"]))
                for p in doc["params"]
            }
            ledger = [LedgerEntry(int(e["row"]), e["attr"], e["action"])
                      for e in doc["ledger"]]
            return cls(
                schema_fingerprint=doc["schema_fingerprint"],
                n_clusters=int(doc["k"]),
                labels=[int(v) for v in doc["labels"]],
                params=params,
                ledger=ledger,
                tokens=dict(doc.get("tokens", {})),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DataFormatError(f"malformed metadata sidecar: {exc}") from None

    def write(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, sort_keys=True)
            fh.write("\n")

    @classmethod
    def read(cls, path: str | Path) -> "TransformMetadata":
        with open(path, "r", encoding="utf-8") as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise DataFormatError(
                    f"{path}: not valid JSON: {exc}") from None
        return cls.from_json_dict(doc)


def _resolve_token(schema: Schema, attr: str, default_token: str,
                   overrides: Mapping[str, str] | None) -> str:
    if overrides and attr in overrides:
        return overrides[attr]
    configured = schema.attribute(attr).token
    return configured if configured is not None else default_token


def apply_transforms(table: DataTable, schema: Schema | None,
                     assignment: ClusterAssignment, mask: SensitivityMask,
                     params: Mapping[tuple[int, str], FuzzyParams] | None = None,
                     default_token: str = DEFAULT_TOKEN,
                     token_overrides: Mapping[str, str] | None = None
                     ) -> tuple[DataTable, TransformMetadata]:
    """Produce the modified table and its reconstruction metadata.

    Flagged numeric cells are fuzzified with their cluster's range; flagged
    categorical cells are generalized when the attribute has a hierarchy and
    suppressed otherwise.  Everything else passes through untouched, and the
    output has exactly the input's shape.  The ledger records precisely the
    cells whose value changed.
    """
    schema = schema or table.schema
    if params is None:
        params = {}
        for attr in mask.numeric_attributes:
            for cluster, p in compute_fuzzy_params(
                    table, assignment, attr, allow_empty=True).items():
                params[(cluster, attr)] = p

    tokens: dict[str, str] = {}
    for attr in mask.categorical_attributes:
        tokens[attr] = _resolve_token(schema, attr, default_token,
                                      token_overrides)

    rows = [list(row) for row in table.rows]
    ledger: list[LedgerEntry] = []
    monitored = [a.name for a in schema.attributes
                 if a.name in mask.monitored_attributes]
    for row_index in range(table.n_rows):
        for attr in monitored:
            if not mask.is_flagged(row_index, attr):
                continue
            col = schema.index_of(attr)
            old = rows[row_index][col]
            a = schema.attribute(attr)
            if a.is_numeric:
                cluster = int(assignment.labels[row_index])
                p = params.get((cluster, attr))
                if p is None:
                    raise FuzzanonError(
                        f"no fuzzification range for cluster {cluster}, "
                        f"attribute {attr!r}")
                new: Cell = s_membership(old, p.beta, p.gamma)
                action = ACTION_FUZZIFIED
            elif a.hierarchy is not None:
                new = generalize(old, a.hierarchy, tokens[attr])
                action = ACTION_GENERALIZED
            else:
                new = suppress(old, tokens[attr])
                action = ACTION_SUPPRESSED
            if new != old:
                rows[row_index][col] = new
                ledger.append(LedgerEntry(row_index, attr, action))

    metadata = TransformMetadata(
        schema_fingerprint=schema.fingerprint(),
        n_clusters=assignment.n_clusters,
        labels=[int(v) for v in assignment.labels],
        params=dict(params),
        ledger=ledger,
        tokens=tokens,
    )
    return DataTable(schema, rows), metadata


def reconstruct(modified: DataTable, metadata: TransformMetadata) -> DataTable:
    """Invert every fuzzified cell; suppressed and generalized cells are not
    recoverable and pass through unchanged."""
    if metadata.schema_fingerprint != modified.schema.fingerprint():
        raise FingerprintMismatchError(
            "metadata sidecar does not match the table's schema")
    if len(metadata.labels) != modified.n_rows:
        raise DataFormatError(
            f"metadata covers {len(metadata.labels)} records, table has "
            f"{modified.n_rows}")
    rows = [list(row) for row in modified.rows]
    for entry in metadata.ledger:
        if entry.action != ACTION_FUZZIFIED:
            continue
        if not 0 <= entry.row < len(rows):
            raise DataFormatError(f"ledger references row {entry.row}, "
                                  f"table has {len(rows)} rows")
        try:
            col = modified.schema.index_of(entry.attribute)
        except ValueError:
            raise DataFormatError(f"ledger references unknown attribute "
                                  f"{entry.attribute!r}") from None
        cluster = metadata.labels[entry.row]
        p = metadata.params.get((cluster, entry.attribute))
        if p is None:
            raise DataFormatError(
                f"metadata lacks fuzzification range for cluster {cluster}, "
                f"attribute {entry.attribute!r}")
        cell = rows[entry.row][col]
        if not isinstance(cell, float):
            raise DataFormatError(
                f"row {entry.row}, {entry.attribute}: fuzzified cell is not "
                f"numeric ({cell!r})")
        rows[entry.row][col] = p.beta if p.beta == p.gamma \
            else inverse_s(cell, p.beta, p.gamma)
    return DataTable(modified.schema, rows)
