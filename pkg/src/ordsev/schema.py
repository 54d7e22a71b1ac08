"""Categorical data model: schemas, record ingestion, cross-tabs and dummy encoding.

A schema declares an ordered outcome (lowest to highest severity) and a list of
categorical covariates. Each covariate has one base category and a subset of
``selected`` categories that enter the model as 0/1 dummies. Categories that
are neither base nor selected fold into the reference group when encoding.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError, SchemaError

DEFAULT_OUTCOME_COLUMN = "Severity"

UNKNOWN_POLICIES = ("drop", "map", "error")


@dataclass(frozen=True)
class VariableSpec:
    name: str
    categories: tuple[str, ...]
    base: str
    selected: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "categories", tuple(self.categories))
        object.__setattr__(self, "selected", tuple(self.selected))
        if not self.name:
            raise SchemaError("variable with empty name")
        if len(self.categories) < 1:
            raise SchemaError(f"variable {self.name!r}: no categories")
        if len(set(self.categories)) != len(self.categories):
            raise SchemaError(f"variable {self.name!r}: duplicate category labels")
        if self.base not in self.categories:
            raise SchemaError(f"variable {self.name!r}: base {self.base!r} not in categories")
        if len(set(self.selected)) != len(self.selected):
            raise SchemaError(f"variable {self.name!r}: duplicate selected labels")
        for label in self.selected:
            if label == self.base:
                raise SchemaError(f"variable {self.name!r}: base {label!r} cannot be a selected dummy")
            if label not in self.categories:
                raise SchemaError(f"variable {self.name!r}: selected {label!r} not in categories")

    def index(self, label: str) -> int:
        return self.categories.index(label)


@dataclass(frozen=True)
class CategoricalSchema:
    outcome: tuple[str, ...]
    variables: tuple[VariableSpec, ...]
    outcome_column: str = DEFAULT_OUTCOME_COLUMN

    def __post_init__(self):
        object.__setattr__(self, "outcome", tuple(self.outcome))
        object.__setattr__(self, "variables", tuple(self.variables))
        if len(self.outcome) < 2:
            raise SchemaError(f"outcome {self.outcome_column!r}: needs at least 2 classes")
        if len(set(self.outcome)) != len(self.outcome):
            raise SchemaError(f"outcome {self.outcome_column!r}: duplicate class labels")
        names = [v.name for v in self.variables]
        for name in names:
            if names.count(name) > 1:
                raise SchemaError(f"variable {name!r}: declared more than once")
        if self.outcome_column in names:
            raise SchemaError(f"variable {self.outcome_column!r}: clashes with the outcome column")

    @property
    def n_classes(self) -> int:
        return len(self.outcome)

    @property
    def column_labels(self) -> list[tuple[str, str]]:
        """(variable, category) for every dummy, in declaration order."""
        return [(v.name, c) for v in self.variables for c in v.selected]

    @property
    def n_dummies(self) -> int:
        return sum(len(v.selected) for v in self.variables)

    def variable(self, name: str) -> VariableSpec:
        for v in self.variables:
            if v.name == name:
                return v
        raise SchemaError(f"unknown variable {name!r}")

    def variable_index(self, name: str) -> int:
        for i, v in enumerate(self.variables):
            if v.name == name:
                return i
        raise SchemaError(f"unknown variable {name!r}")

    def to_dict(self) -> dict:
        return {
            "outcome": list(self.outcome),
            "outcome_column": self.outcome_column,
            "variables": [
                {
                    "name": v.name,
                    "categories": list(v.categories),
                    "base": v.base,
                    "selected": list(v.selected),
                }
                for v in self.variables
            ],
        }

    def sha256(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"), ensure_ascii=False)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def schema_from_dict(tree: dict) -> CategoricalSchema:
    if not isinstance(tree, dict):
        raise SchemaError("schema must be a key/value mapping")
    if "outcome" not in tree:
        raise SchemaError("schema: missing key 'outcome'")
    if "variables" not in tree:
        raise SchemaError("schema: missing key 'variables'")
    outcome = tree["outcome"]
    if not isinstance(outcome, list) or not all(isinstance(c, str) for c in outcome):
        raise SchemaError("outcome: must be a list of class labels")
    raw_vars = tree["variables"]
    if not isinstance(raw_vars, list):
        raise SchemaError("variables: must be a list")
    variables = []
    for i, raw in enumerate(raw_vars):
        name = raw.get("name") if isinstance(raw, dict) else None
        if not isinstance(name, str):
            raise SchemaError(f"variable #{i}: missing 'name'")
        for key in ("categories", "base"):
            if key not in raw:
                raise SchemaError(f"variable {name!r}: missing key {key!r}")
        categories = raw["categories"]
        selected = raw.get("selected", [])
        if not isinstance(categories, list) or not all(isinstance(c, str) for c in categories):
            raise SchemaError(f"variable {name!r}: 'categories' must be a list of labels")
        if not isinstance(selected, list) or not all(isinstance(c, str) for c in selected):
            raise SchemaError(f"variable {name!r}: 'selected' must be a list of labels")
        if not isinstance(raw["base"], str):
            raise SchemaError(f"variable {name!r}: 'base' must be a label")
        variables.append(VariableSpec(name, categories, raw["base"], selected))
    return CategoricalSchema(
        outcome=outcome,
        variables=variables,
        outcome_column=tree.get("outcome_column", DEFAULT_OUTCOME_COLUMN),
    )


def parse_schema(config_text: str) -> CategoricalSchema:
    """Parse and validate a JSON schema document."""
    try:
        tree = json.loads(config_text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"schema: malformed JSON ({exc})") from None
    return schema_from_dict(tree)


@dataclass(frozen=True)
class DroppedRow:
    row: int  # 1-based data row number (header excluded)
    column: str
    label: str


@dataclass(frozen=True)
class Dataset:
    """Parsed observations as integer codes.

    ``severity[i]`` indexes ``schema.outcome``; ``codes[i, v]`` indexes the
    categories of ``schema.variables[v]``.
    """

    schema: CategoricalSchema
    severity: np.ndarray
    codes: np.ndarray
    dropped_count: int = 0
    dropped: tuple[DroppedRow, ...] = field(default=(), repr=False)

    def __post_init__(self):
        severity = np.array(self.severity, dtype=np.int64).reshape(-1)
        codes = np.array(self.codes, dtype=np.int64).reshape(len(severity), len(self.schema.variables))
        if severity.size and (severity.min() < 0 or severity.max() >= self.schema.n_classes):
            raise DataError("severity index out of range")
        for v, spec in enumerate(self.schema.variables):
            col = codes[:, v]
            if col.size and (col.min() < 0 or col.max() >= len(spec.categories)):
                raise DataError(f"variable {spec.name!r}: category index out of range")
        severity.flags.writeable = False
        codes.flags.writeable = False
        object.__setattr__(self, "severity", severity)
        object.__setattr__(self, "codes", codes)

    def __len__(self) -> int:
        return len(self.severity)

    @property
    def is_empty(self) -> bool:
        return len(self.severity) == 0

    def column(self, name: str) -> tuple[np.ndarray, tuple[str, ...]]:
        """Codes and labels for a variable; the outcome column is accepted too."""
        if name == self.schema.outcome_column:
            return self.severity, self.schema.outcome
        v = self.schema.variable_index(name)
        return self.codes[:, v], self.schema.variables[v].categories


def ingest_records(
    rows: Iterable[str] | io.TextIOBase,
    schema: CategoricalSchema,
    policy: str = "drop",
    catch_all: str = "Other",
) -> Dataset:
    """Read delimited records into a :class:`Dataset`.

    ``policy`` governs labels absent from the schema: ``"drop"`` skips the row,
    ``"map"`` routes covariate labels to the variable's ``catch_all`` category
    (rows whose variable has no such category, or whose outcome is unknown,
    are still dropped) and ``"error"`` raises on the first unknown label.
    Extra columns are ignored.
    """
    if policy not in UNKNOWN_POLICIES:
        raise ValueError(f"unknown policy {policy!r}; expected one of {UNKNOWN_POLICIES}")
    reader = csv.reader(rows)
    try:
        header = next(reader)
    except StopIteration:
        raise DataError("empty input: no header row") from None
    header = [h.strip() for h in header]
    if header and header[0].startswith("\ufeff"):
        header[0] = header[0][1:]

    required = [schema.outcome_column] + [v.name for v in schema.variables]
    positions = []
    for name in required:
        if name not in header:
            raise DataError(f"missing required column {name!r}")
        positions.append(header.index(name))

    lookups = [{label: i for i, label in enumerate(schema.outcome)}]
    lookups += [{label: i for i, label in enumerate(v.categories)} for v in schema.variables]
    fallbacks = [None] + [lk.get(catch_all) if policy == "map" else None for lk in lookups[1:]]

    severity: list[int] = []
    codes: list[list[int]] = []
    dropped: list[DroppedRow] = []
    n_dropped = 0
    width = max(positions) + 1
    for rownum, row in enumerate(reader, start=1):
        if not row:
            continue
        if len(row) < width:
            row = row + [""] * (width - len(row))
        out = []
        bad = None
        for pos, name, lookup, fallback in zip(positions, required, lookups, fallbacks):
            label = row[pos].strip()
            idx = lookup.get(label)
            if idx is None:
                idx = fallback
            if idx is None:
                bad = DroppedRow(rownum, name, label)
                break
            out.append(idx)
        if bad is not None:
            if policy == "error":
                raise DataError(f"row {bad.row}, column {bad.column!r}: label {bad.label!r} not in schema")
            n_dropped += 1
            if len(dropped) < 100:
                dropped.append(bad)
            continue
        severity.append(out[0])
        codes.append(out[1:])

    if not severity:
        warnings.warn("dataset has no records", stacklevel=2)
    return Dataset(
        schema=schema,
        severity=np.array(severity, dtype=np.int64),
        codes=np.array(codes, dtype=np.int64).reshape(len(severity), len(schema.variables)),
        dropped_count=n_dropped,
        dropped=tuple(dropped),
    )


def write_records(dataset: Dataset, stream) -> None:
    """Write a dataset as a records CSV (outcome column first)."""
    schema = dataset.schema
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow([schema.outcome_column] + [v.name for v in schema.variables])
    outcome = np.array(schema.outcome, dtype=object)
    columns = [outcome[dataset.severity]]
    for v, spec in enumerate(schema.variables):
        columns.append(np.array(spec.categories, dtype=object)[dataset.codes[:, v]])
    writer.writerows(zip(*columns))


@dataclass(frozen=True)
class Crosstab:
    variable: str
    categories: tuple[str, ...]
    classes: tuple[str, ...]
    counts: np.ndarray  # categories x classes

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def row_totals(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def class_totals(self) -> np.ndarray:
        return self.counts.sum(axis=0)

    @property
    def row_percentages(self) -> np.ndarray:
        """Share of each class within a category, in percent (zero rows stay 0)."""
        rows = self.row_totals[:, None].astype(float)
        with np.errstate(invalid="ignore", divide="ignore"):
            pct = np.where(rows > 0, 100.0 * self.counts / np.where(rows > 0, rows, 1.0), 0.0)
        return pct

    @property
    def total_percentages(self) -> np.ndarray:
        """Share of each category in the whole dataset, in percent."""
        n = self.total
        return 100.0 * self.row_totals / n if n else np.zeros(len(self.categories))


def crosstab(dataset: Dataset, variable: str) -> Crosstab:
    """Counts per (category x severity class), the layout of a descriptive table."""
    schema = dataset.schema
    spec = schema.variable(variable)
    v = schema.variable_index(variable)
    n_cat, n_cls = len(spec.categories), schema.n_classes
    flat = dataset.codes[:, v] * n_cls + dataset.severity
    counts = np.bincount(flat, minlength=n_cat * n_cls).reshape(n_cat, n_cls)
    return Crosstab(variable, spec.categories, schema.outcome, counts)


@dataclass(frozen=True)
class DesignMatrix:
    X: np.ndarray  # N x K, float 0/1
    y: np.ndarray  # N, int class index
    labels: tuple[tuple[str, str], ...]
    n_classes: int

    def __post_init__(self):
        X = np.array(self.X, dtype=float)
        y = np.array(self.y, dtype=np.int64).reshape(-1)
        if X.ndim != 2:
            X = X.reshape(len(y), -1)
        if X.shape[0] != y.shape[0]:
            raise DataError(f"design has {X.shape[0]} rows but {y.shape[0]} outcomes")
        if X.shape[1] != len(self.labels):
            raise DataError(f"design has {X.shape[1]} columns but {len(self.labels)} labels")
        if y.size and (y.min() < 0 or y.max() >= self.n_classes):
            raise DataError("outcome index out of range")
        X.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "labels", tuple(tuple(lab) for lab in self.labels))

    @property
    def n_obs(self) -> int:
        return self.X.shape[0]

    @property
    def n_columns(self) -> int:
        return self.X.shape[1]

    def column_index(self, column) -> int:
        if isinstance(column, (int, np.integer)):
            if not 0 <= column < self.n_columns:
                raise KeyError(f"column index {column} out of range")
            return int(column)
        key = tuple(column) if not isinstance(column, str) else None
        if key is None:
            variable, sep, category = column.partition(":")
            key = (variable, category) if sep else None
        if key in self.labels:
            return self.labels.index(key)
        raise KeyError(f"unknown design column {column!r}")

    def siblings(self, column) -> list[int]:
        """Indices of all columns belonging to the same variable (itself included)."""
        variable = self.labels[self.column_index(column)][0]
        return [i for i, (v, _) in enumerate(self.labels) if v == variable]

    def groups(self) -> dict[str, list[int]]:
        out: dict[str, list[int]] = {}
        for i, (v, _) in enumerate(self.labels):
            out.setdefault(v, []).append(i)
        return out


def encode_codes(codes: np.ndarray, schema: CategoricalSchema) -> np.ndarray:
    """Dummy-encode an (N x V) array of category codes."""
    codes = np.asarray(codes, dtype=np.int64).reshape(-1, len(schema.variables))
    X = np.zeros((codes.shape[0], schema.n_dummies))
    col = 0
    for v, spec in enumerate(schema.variables):
        for label in spec.selected:
            X[:, col] = codes[:, v] == spec.index(label)
            col += 1
    return X


def encode_design(dataset: Dataset, schema: CategoricalSchema | None = None) -> DesignMatrix:
    schema = schema or dataset.schema
    if schema is not dataset.schema and schema != dataset.schema:
        raise SchemaError("dataset was ingested under a different schema")
    return DesignMatrix(
        X=encode_codes(dataset.codes, schema),
        y=dataset.severity,
        labels=schema.column_labels,
        n_classes=schema.n_classes,
    )


def decode_design_row(row: Sequence[float], schema: CategoricalSchema) -> dict[str, str | None]:
    """Selected category per variable for one design row; ``None`` means reference group."""
    out: dict[str, str | None] = {}
    col = 0
    for spec in schema.variables:
        hit = None
        for label in spec.selected:
            if row[col] == 1:
                if hit is not None:
                    raise DataError(f"variable {spec.name!r}: more than one dummy set")
                hit = label
            col += 1
        out[spec.name] = hit
    return out
