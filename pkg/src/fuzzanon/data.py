"""Typed tabular data model: attribute roles, schemas, and CSV ingestion/emission.

Cells are plain Python values: ``float`` for numeric data, ``str`` for
categorical data, ``None`` for missing.  Numeric cells are never NaN or
infinite and text cells are never empty; anything that would violate
that parses to ``None`` instead.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Mapping, Sequence

from fuzzanon.errors import DataFormatError, SchemaMismatchError

Cell = float | str | None

#: Cell texts interpreted as missing values ("?" is the UCI convention).
DEFAULT_MISSING_MARKERS = ("", "?")

NUMERIC = "numeric"
CATEGORICAL = "categorical"


class AttributeRole(str, Enum):
    """Privacy role of a column."""

    IDENTIFIER = "Identifier"
    SENSITIVE_NUMERIC = "SensitiveNumeric"
    SENSITIVE_CATEGORICAL = "SensitiveCategorical"
    QUASI_NUMERIC = "QuasiNumeric"
    QUASI_CATEGORICAL = "QuasiCategorical"
    NON_SENSITIVE = "NonSensitive"

    @property
    def is_sensitive(self) -> bool:
        return self in (AttributeRole.SENSITIVE_NUMERIC,
                        AttributeRole.SENSITIVE_CATEGORICAL)

    @property
    def is_quasi(self) -> bool:
        return self in (AttributeRole.QUASI_NUMERIC,
                        AttributeRole.QUASI_CATEGORICAL)

    @property
    def is_monitored(self) -> bool:
        """Sensitive and quasi columns are the ones the pipeline may modify."""
        return self.is_sensitive or self.is_quasi


_NUMERIC_ROLES = (AttributeRole.SENSITIVE_NUMERIC, AttributeRole.QUASI_NUMERIC)


@dataclass(frozen=True)
class Attribute:
    """One column: its name, privacy role, kind, and optional transform hints.

    ``hierarchy`` maps raw categorical values to coarser labels; ``token``
    overrides the suppression token for this column.
    """

    name: str
    role: AttributeRole
    kind: str
    hierarchy: Mapping[str, str] | None = None
    token: str | None = None

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("attribute name must be non-empty")
        if self.kind not in (NUMERIC, CATEGORICAL):
            raise ValueError(f"{self.name}: kind must be {NUMERIC!r} or "
                             f"{CATEGORICAL!r}, got {self.kind!r}")
        if self.role in _NUMERIC_ROLES and self.kind != NUMERIC:
            raise ValueError(f"{self.name}: role {self.role.value} requires "
                             f"kind {NUMERIC!r}")
        # A hierarchy on a numeric column is reported by validate_schema
        # rather than rejected here, so malformed schemas can be profiled.

    @property
    def is_numeric(self) -> bool:
        return self.kind == NUMERIC


@dataclass(frozen=True)
class Schema:
    """Ordered column annotations for one dataset."""

    attributes: tuple[Attribute, ...]
    _index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        attrs = tuple(self.attributes)
        object.__setattr__(self, "attributes", attrs)
        names = [a.name for a in attrs]
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise ValueError(f"duplicate attribute names: {dupes}")
        object.__setattr__(self, "_index", {n: i for i, n in enumerate(names)})

    def __len__(self) -> int:
        return len(self.attributes)

    @property
    def names(self) -> list[str]:
        return [a.name for a in self.attributes]

    def index_of(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise ValueError(f"unknown attribute {name!r}") from None

    def attribute(self, name: str) -> Attribute:
        return self.attributes[self.index_of(name)]

    @property
    def monitored_names(self) -> list[str]:
        """Sensitive + quasi attribute names, in schema order."""
        return [a.name for a in self.attributes if a.role.is_monitored]

    @property
    def monitored_numeric(self) -> list[str]:
        return [a.name for a in self.attributes
                if a.role.is_monitored and a.is_numeric]

    @property
    def monitored_categorical(self) -> list[str]:
        return [a.name for a in self.attributes
                if a.role.is_monitored and not a.is_numeric]

    @property
    def identifier_names(self) -> list[str]:
        return [a.name for a in self.attributes
                if a.role is AttributeRole.IDENTIFIER]

    @property
    def non_sensitive_names(self) -> list[str]:
        return [a.name for a in self.attributes
                if a.role is AttributeRole.NON_SENSITIVE]

    def to_json_dict(self) -> dict:
        out = []
        for a in self.attributes:
            entry: dict = {"name": a.name, "role": a.role.value, "kind": a.kind}
            if a.hierarchy is not None:
                entry["hierarchy"] = dict(a.hierarchy)
            if a.token is not None:
                entry["token"] = a.token
            out.append(entry)
        return {"attributes": out}

    @classmethod
    def from_json_dict(cls, doc: Mapping) -> "Schema":
        if not isinstance(doc, Mapping) or "attributes" not in doc:
            raise DataFormatError("schema document must contain an "
                                  "'attributes' array")
        attrs = []
        for i, entry in enumerate(doc["attributes"]):
            try:
                role = AttributeRole(entry["role"])
            except (KeyError, ValueError):
                valid = ", ".join(r.value for r in AttributeRole)
                raise DataFormatError(
                    f"attributes[{i}]: role must be one of {valid}") from None
            try:
                attrs.append(Attribute(
                    name=entry["name"],
                    role=role,
                    kind=entry.get("kind", ""),
                    hierarchy=entry.get("hierarchy"),
                    token=entry.get("token"),
                ))
            except (KeyError, ValueError) as exc:
                raise DataFormatError(f"attributes[{i}]: {exc}") from None
        return cls(tuple(attrs))

    def fingerprint(self) -> str:
        """Stable hex digest of the schema, used to pair tables with sidecars."""
        blob = json.dumps(self.to_json_dict(), sort_keys=True,
                          separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def load_schema(path: str | Path) -> Schema:
    """Read a schema from its JSON file format."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataFormatError(f"{path}: not valid JSON: {exc}") from None
    return Schema.from_json_dict(doc)


def write_schema(schema: Schema, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(schema.to_json_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


@dataclass
class DataTable:
    """Rectangular table of cells, paired with its schema.

    Treated as immutable after construction; operations that modify data
    return new tables.
    """

    schema: Schema
    rows: list[list[Cell]]

    def __post_init__(self) -> None:
        width = len(self.schema)
        for i, row in enumerate(self.rows):
            if len(row) != width:
                raise DataFormatError(
                    f"row {i}: expected {width} fields, got {len(row)}")

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    @property
    def n_columns(self) -> int:
        return len(self.schema)

    def column(self, name: str) -> list[Cell]:
        i = self.schema.index_of(name)
        return [row[i] for row in self.rows]

    def cell(self, row: int, name: str) -> Cell:
        return self.rows[row][self.schema.index_of(name)]

    def copy(self) -> "DataTable":
        return DataTable(self.schema, [list(row) for row in self.rows])

    def select_columns(self, names: Sequence[str]) -> "DataTable":
        idx = [self.schema.index_of(n) for n in names]
        sub_schema = Schema(tuple(self.schema.attributes[i] for i in idx))
        return DataTable(sub_schema, [[row[i] for i in idx] for row in self.rows])


@dataclass(frozen=True)
class ColumnStats:
    """Summary statistics for one column; min/max are None for categoricals."""

    name: str
    count: int
    missing: int
    distinct: int
    minimum: float | None = None
    maximum: float | None = None


def parse_cell(text: str, numeric: bool,
               missing_markers: Sequence[str] = DEFAULT_MISSING_MARKERS) -> Cell:
    """Interpret one raw CSV field. Unparseable numerics become missing."""
    text = text.strip()
    if text in missing_markers:
        return None
    if not numeric:
        return text
    try:
        value = float(text)
    except ValueError:
        return None
    if math.isnan(value) or math.isinf(value):
        return None
    return value


def format_cell(cell: Cell) -> str:
    """Render one cell for CSV output; floats round-trip exactly."""
    if cell is None:
        return ""
    if isinstance(cell, str):
        return cell
    if cell.is_integer() and abs(cell) < 2 ** 53:
        return str(int(cell))
    return repr(cell)


def load_csv(path: str | Path, schema: Schema,
             missing_markers: Sequence[str] = DEFAULT_MISSING_MARKERS) -> DataTable:
    """Load an RFC-4180 CSV file against a schema.

    The header must contain exactly the schema's attribute names; column
    order in the file is free and is normalized to schema order.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataFormatError(f"{path}: empty file, header row required") from None
        missing = [n for n in schema.names if n not in header]
        unexpected = [h for h in header if h not in schema._index]
        if missing or unexpected:
            parts = []
            if missing:
                parts.append(f"missing from file: {missing}")
            if unexpected:
                parts.append(f"not in schema: {unexpected}")
            raise SchemaMismatchError(
                f"{path}: header does not match schema ({'; '.join(parts)})",
                missing=missing, unexpected=unexpected)
        if len(header) != len(schema):
            raise SchemaMismatchError(
                f"{path}: header repeats a column name", missing=[], unexpected=[])
        order = [header.index(n) for n in schema.names]
        numeric = [a.is_numeric for a in schema.attributes]

        rows: list[list[Cell]] = []
        width = len(header)
        for lineno, raw in enumerate(reader, start=2):
            if len(raw) != width:
                raise DataFormatError(
                    f"{path}: row {lineno}: expected {width} fields, "
                    f"got {len(raw)}")
            rows.append([parse_cell(raw[order[j]], numeric[j], missing_markers)
                         for j in range(width)])
    return DataTable(schema, rows)


def write_csv(table: DataTable, path: str | Path) -> None:
    """Emit a table as RFC-4180 CSV with a header row."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(table.schema.names)
        for row in table.rows:
            writer.writerow([format_cell(c) for c in row])


def column_stats(table: DataTable, name: str) -> ColumnStats:
    """Min/max/counts over the non-missing cells of one column."""
    attr = table.schema.attribute(name)
    values = table.column(name)
    present = [v for v in values if v is not None]
    missing = len(values) - len(present)
    distinct = len(set(present))
    if attr.is_numeric and present:
        return ColumnStats(name, len(present), missing, distinct,
                           minimum=min(present), maximum=max(present))
    return ColumnStats(name, len(present), missing, distinct)


@dataclass(frozen=True)
class Violation:
    """One problem found by validate_schema; ``row`` is None for schema-shape
    problems that are not tied to a data cell."""

    category: str  # "type" | "schema" | "hierarchy" | "shape"
    message: str
    row: int | None = None
    attribute: str | None = None

    def __str__(self) -> str:
        where = ""
        if self.row is not None:
            where = f"row {self.row}"
        if self.attribute is not None:
            where = f"{where}, {self.attribute}" if where else self.attribute
        return f"[{self.category}] {where}: {self.message}" if where \
            else f"[{self.category}] {self.message}"


def validate_schema(table: DataTable, schema: Schema | None = None) -> list[Violation]:
    """Check a table against a schema; an empty list means it conforms.

    Violations are data, not errors: callers decide what to reject.
    """
    schema = schema or table.schema
    out: list[Violation] = []
    for a in schema.attributes:
        if a.hierarchy is not None and a.is_numeric:
            out.append(Violation("schema", "hierarchy attached to a numeric "
                                 "column", attribute=a.name))
    width = len(schema)
    for i, row in enumerate(table.rows):
        if len(row) != width:
            out.append(Violation("shape", f"expected {width} fields, got "
                                 f"{len(row)}", row=i))
            continue
        for a, cell in zip(schema.attributes, row):
            if cell is None:
                continue
            if a.is_numeric:
                if not isinstance(cell, float):
                    out.append(Violation("type", f"non-numeric value {cell!r} "
                                         "in numeric column", row=i,
                                         attribute=a.name))
                elif math.isnan(cell) or math.isinf(cell):
                    out.append(Violation("type", "numeric cell is NaN or "
                                         "infinite", row=i, attribute=a.name))
            else:
                if not isinstance(cell, str):
                    out.append(Violation("type", f"non-text value {cell!r} in "
                                         "categorical column", row=i,
                                         attribute=a.name))
                elif cell == "":
                    out.append(Violation("type", "empty text cell (should be "
                                         "missing)", row=i, attribute=a.name))
                elif a.hierarchy is not None and cell not in a.hierarchy:
                    out.append(Violation("hierarchy", f"value {cell!r} not in "
                                         "hierarchy", row=i, attribute=a.name))
    return out
