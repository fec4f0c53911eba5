"""Dataset schema declaration, ingestion, fold assignment, and class weighting.

A schema is an explicit sidecar file (YAML) describing every feature:
its kind, the declared direction of risk, sentinel codes for structured
missingness, and the subscale the feature belongs to.  Observations are
plain CSV with a header row; sentinel codes stay in the file verbatim and
are interpreted downstream, never as ordinary magnitudes.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import yaml

SCHEMA_VERSION = 1

MONOTONICITIES = ("increasing", "decreasing", "none")
KINDS = ("numeric", "categorical")


class SchemaError(ValueError):
    """Raised when a schema file is malformed or violates its invariants."""


class DataError(ValueError):
    """Raised when a data file cannot be parsed against its schema."""


@dataclass(frozen=True)
class SpecialValue:
    """Sentinel code for structured missingness, e.g. -9 = no record on file."""

    code: float
    meaning: str


@dataclass(frozen=True)
class FeatureSpec:
    name: str
    kind: str
    monotonicity: str = "none"
    special_values: tuple[SpecialValue, ...] = ()
    subscale: str = ""

    def __post_init__(self):
        if not self.name:
            raise SchemaError("feature name must be non-empty")
        if self.kind not in KINDS:
            raise SchemaError(f"feature {self.name!r}: unknown kind {self.kind!r}")
        if self.monotonicity not in MONOTONICITIES:
            raise SchemaError(
                f"feature {self.name!r}: unknown monotonicity {self.monotonicity!r}"
            )
        if self.kind == "categorical" and self.monotonicity != "none":
            raise SchemaError(
                f"feature {self.name!r}: categorical features cannot declare monotonicity"
            )
        if self.kind == "categorical" and self.special_values:
            raise SchemaError(
                f"feature {self.name!r}: special values apply to numeric features only"
            )
        codes = [sv.code for sv in self.special_values]
        if len(set(codes)) != len(codes):
            raise SchemaError(f"feature {self.name!r}: duplicate special codes")
        if not self.subscale:
            raise SchemaError(f"feature {self.name!r}: missing subscale tag")

    @property
    def special_codes(self) -> tuple[float, ...]:
        return tuple(sv.code for sv in self.special_values)

    def is_monotone(self) -> bool:
        return self.monotonicity in ("increasing", "decreasing")


@dataclass(frozen=True)
class Schema:
    """Ordered feature declarations plus the label column description."""

    features: tuple[FeatureSpec, ...]
    label_name: str
    positive_label_meaning: str
    subscale_order: tuple[str, ...] = ()

    def __post_init__(self):
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise SchemaError(f"duplicate feature names: {dupes}")
        if not self.label_name:
            raise SchemaError("schema must name a label column")
        if self.label_name in names:
            raise SchemaError("label column must not also be declared as a feature")
        tags = []
        for f in self.features:
            if f.subscale not in tags:
                tags.append(f.subscale)
        if self.subscale_order:
            unknown = [f.name for f in self.features if f.subscale not in self.subscale_order]
            if unknown:
                raise SchemaError(f"features with unknown subscale tag: {unknown}")
        else:
            object.__setattr__(self, "subscale_order", tuple(tags))

    @property
    def n_features(self) -> int:
        return len(self.features)

    def feature(self, name: str) -> FeatureSpec:
        for f in self.features:
            if f.name == name:
                return f
        raise KeyError(name)

    def feature_index(self, name: str) -> int:
        for i, f in enumerate(self.features):
            if f.name == name:
                return i
        raise KeyError(name)

    def subscale_members(self, tag: str) -> tuple[FeatureSpec, ...]:
        return tuple(f for f in self.features if f.subscale == tag)


@dataclass(frozen=True)
class Dataset:
    """Parsed observations with labels and per-row training weights.

    Numeric columns are float64 arrays (sentinel codes kept verbatim),
    categorical columns are object arrays of tokens.
    """

    schema: Schema
    columns: tuple[np.ndarray, ...]
    labels: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        n = len(self.labels)
        if len(self.columns) != self.schema.n_features:
            raise DataError("column count does not match schema")
        for spec, col in zip(self.schema.features, self.columns):
            if len(col) != n:
                raise DataError(f"column {spec.name!r} has wrong length")
        if len(self.weights) != n:
            raise DataError("weights length does not match rows")
        if n and not np.all(self.weights > 0):
            raise DataError("weights must be positive")
        if n and not np.all(np.isin(self.labels, (0, 1))):
            raise DataError("labels must be 0/1")

    @property
    def n_rows(self) -> int:
        return len(self.labels)

    def column(self, name: str) -> np.ndarray:
        return self.columns[self.schema.feature_index(name)]

    def row(self, i: int) -> dict:
        """Observation i as a feature-name -> value mapping."""
        return {f.name: col[i] for f, col in zip(self.schema.features, self.columns)}

    def subset(self, indices: Sequence[int] | np.ndarray) -> "Dataset":
        idx = np.asarray(indices)
        return Dataset(
            schema=self.schema,
            columns=tuple(col[idx] for col in self.columns),
            labels=self.labels[idx],
            weights=self.weights[idx],
        )

    def class_counts(self) -> tuple[int, int]:
        pos = int(np.sum(self.labels == 1))
        return len(self.labels) - pos, pos


@dataclass(frozen=True)
class FoldAssignment:
    """Stratified fold indices, reproducible from the seed."""

    k: int
    assignment: np.ndarray
    seed: int

    def fold_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignment != fold)


def _parse_special_values(raw, name: str) -> tuple[SpecialValue, ...]:
    out = []
    for item in raw or []:
        if not isinstance(item, dict) or "code" not in item:
            raise SchemaError(f"feature {name!r}: special value entries need a code")
        out.append(SpecialValue(code=float(item["code"]), meaning=str(item.get("meaning", ""))))
    return tuple(out)


def load_schema(path: str | Path) -> Schema:
    """Load and validate a schema sidecar file.

    The file is YAML with a ``schema_version`` field (currently 1), a
    ``label`` column name, ``positive_means`` text, an optional ordered
    ``subscales`` list, and one entry per feature.
    """
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise SchemaError(f"cannot parse schema file {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise SchemaError(f"schema file {path} is not a mapping")
    version = raw.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaError(f"unsupported schema_version {version!r} (expected {SCHEMA_VERSION})")
    features = []
    for entry in raw.get("features", []):
        features.append(
            FeatureSpec(
                name=str(entry.get("name", "")),
                kind=str(entry.get("kind", "")),
                monotonicity=str(entry.get("monotonicity", "none")),
                special_values=_parse_special_values(entry.get("special_values"), entry.get("name")),
                subscale=str(entry.get("subscale", "")),
            )
        )
    if not features:
        raise SchemaError("schema declares no features")
    return Schema(
        features=tuple(features),
        label_name=str(raw.get("label", "")),
        positive_label_meaning=str(raw.get("positive_means", "")),
        subscale_order=tuple(raw.get("subscales", []) or ()),
    )


def save_schema(schema: Schema, path: str | Path) -> None:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "label": schema.label_name,
        "positive_means": schema.positive_label_meaning,
        "subscales": list(schema.subscale_order),
        "features": [
            {
                "name": f.name,
                "kind": f.kind,
                "monotonicity": f.monotonicity,
                "subscale": f.subscale,
                **(
                    {"special_values": [{"code": sv.code, "meaning": sv.meaning} for sv in f.special_values]}
                    if f.special_values
                    else {}
                ),
            }
            for f in schema.features
        ],
    }
    Path(path).write_text(yaml.safe_dump(doc, sort_keys=False), encoding="utf-8")


_LABEL_MAP = {"0": 0, "1": 1, "0.0": 0, "1.0": 1}


def _parse_label(cell: str, row_no: int) -> int:
    try:
        return _LABEL_MAP[cell.strip()]
    except KeyError:
        raise DataError(f"row {row_no}: label {cell!r} is not 0/1") from None


def load_dataset(path: str | Path, schema: Schema) -> Dataset:
    """Parse a CSV file against a schema.

    Sentinel codes parse as their numeric value and are preserved; they
    are marked as special downstream by comparing against the schema's
    declared codes.  Columns not named by the schema are ignored.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        positions = {}
        for spec in schema.features:
            if spec.name not in header:
                raise DataError(f"{path}: missing column {spec.name!r}")
            positions[spec.name] = header.index(spec.name)
        if schema.label_name not in header:
            raise DataError(f"{path}: missing label column {schema.label_name!r}")
        label_pos = header.index(schema.label_name)

        raw_cols: list[list] = [[] for _ in schema.features]
        labels: list[int] = []
        for row_no, row in enumerate(reader, start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) < len(header):
                raise DataError(f"{path}: row {row_no} has {len(row)} cells, expected {len(header)}")
            for j, spec in enumerate(schema.features):
                cell = row[positions[spec.name]].strip()
                if spec.kind == "numeric":
                    try:
                        raw_cols[j].append(float(cell))
                    except ValueError:
                        raise DataError(
                            f"{path}: row {row_no}, column {spec.name!r}: cannot parse {cell!r}"
                        ) from None
                else:
                    raw_cols[j].append(cell)
            labels.append(_parse_label(row[label_pos], row_no))

    if not labels:
        raise DataError(f"{path}: no rows")
    columns = tuple(
        np.asarray(col, dtype=np.float64 if spec.kind == "numeric" else object)
        for spec, col in zip(schema.features, raw_cols)
    )
    n = len(labels)
    return Dataset(
        schema=schema,
        columns=columns,
        labels=np.asarray(labels, dtype=np.int8),
        weights=np.ones(n, dtype=np.float64),
    )


def save_dataset(dataset: Dataset, path: str | Path) -> None:
    """Write a dataset back to CSV in schema column order (label last)."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([f.name for f in dataset.schema.features] + [dataset.schema.label_name])
        for i in range(dataset.n_rows):
            cells = []
            for spec, col in zip(dataset.schema.features, dataset.columns):
                v = col[i]
                if spec.kind == "numeric":
                    fv = float(v)
                    cells.append(str(int(fv)) if fv.is_integer() else repr(fv))
                else:
                    cells.append(str(v))
            cells.append(str(int(dataset.labels[i])))
            writer.writerow(cells)


def stratified_folds(dataset: Dataset, k: int, seed: int) -> FoldAssignment:
    """Assign rows to k folds, keeping the class mix even across folds.

    Within each class, rows are shuffled by a seeded generator
    (``numpy.random.default_rng``) and dealt into k near-equal chunks, so
    per-fold class counts differ from the even split by at most one.
    """
    if k < 2:
        raise DataError("fold count must be at least 2")
    neg, pos = dataset.class_counts()
    if min(neg, pos) < k:
        raise DataError(f"fold count {k} exceeds minority class count {min(neg, pos)}")
    rng = np.random.default_rng(seed)
    assignment = np.empty(dataset.n_rows, dtype=np.int32)
    offset = 0  # rotate which folds receive remainders, to even out fold sizes
    for cls in (0, 1):
        idx = np.flatnonzero(dataset.labels == cls)
        rng.shuffle(idx)
        n_c = len(idx)
        base, rem = divmod(n_c, k)
        start = 0
        for f in range(k):
            size = base + (1 if (f - offset) % k < rem else 0)
            assignment[idx[start : start + size]] = f
            start += size
        offset += rem
    return FoldAssignment(k=k, assignment=assignment, seed=seed)


def apply_class_weights(dataset: Dataset, weight_pos: float, weight_neg: float) -> Dataset:
    """Return a copy whose row weights are set by label.

    Weights multiply each row's term in the training loss; for integer
    weights this matches duplicating rows, without the extra copies.
    """
    if weight_pos <= 0 or weight_neg <= 0:
        raise DataError("class weights must be positive")
    weights = np.where(dataset.labels == 1, float(weight_pos), float(weight_neg))
    return replace(dataset, weights=weights)


def dataset_from_arrays(
    schema: Schema,
    columns: Iterable[np.ndarray],
    labels: np.ndarray,
    weights: np.ndarray | None = None,
) -> Dataset:
    labels = np.asarray(labels, dtype=np.int8)
    if weights is None:
        weights = np.ones(len(labels), dtype=np.float64)
    return Dataset(
        schema=schema,
        columns=tuple(np.asarray(c) for c in columns),
        labels=labels,
        weights=np.asarray(weights, dtype=np.float64),
    )
