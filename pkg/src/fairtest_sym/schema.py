"""Feature schemas, encoded instances and CSV ingestion.

Every feature lives on a closed integer interval. Categorical columns are
ordinal-encoded in the order their labels are listed in the schema file.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

Instance = tuple[int, ...]


class SchemaError(ValueError):
    """Malformed schema sidecar or schema-level invariant violation."""


class UnknownCategory(ValueError):
    pass


class DomainViolation(ValueError):
    pass


class ArityMismatch(ValueError):
    pass


@dataclass(frozen=True)
class Feature:
    name: str
    lo: int
    hi: int
    kind: str = "numeric"
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.lo > self.hi:
            raise SchemaError(f"{self.name}: empty domain [{self.lo}, {self.hi}]")
        if self.kind not in ("numeric", "categorical"):
            raise SchemaError(f"{self.name}: unknown kind {self.kind!r}")
        if self.kind == "categorical":
            if self.labels is None or len(self.labels) != self.hi - self.lo + 1:
                raise SchemaError(f"{self.name}: label count must match domain size")

    @property
    def size(self) -> int:
        return self.hi - self.lo + 1

    def encode(self, text: str) -> int:
        text = text.strip()
        if self.kind == "categorical":
            try:
                return self.lo + self.labels.index(text)
            except ValueError:
                raise UnknownCategory(f"{self.name}: {text!r} not in {list(self.labels)}") from None
        try:
            value = int(text)
        except ValueError:
            raise DomainViolation(f"{self.name}: {text!r} is not an integer") from None
        if not self.lo <= value <= self.hi:
            raise DomainViolation(f"{self.name}: {value} outside [{self.lo}, {self.hi}]")
        return value

    def decode(self, value: int) -> str:
        if self.kind == "categorical":
            return self.labels[value - self.lo]
        return str(value)

    def to_dict(self) -> dict:
        if self.kind == "categorical":
            d = {"name": self.name, "kind": "categorical", "labels": list(self.labels)}
            if self.lo != 0:
                d["domain"] = [self.lo, self.hi]
            return d
        return {"name": self.name, "domain": [self.lo, self.hi], "kind": "numeric"}


@dataclass(frozen=True)
class FeatureSchema:
    features: tuple[Feature, ...]
    protected: frozenset[str] = frozenset()
    label: str = "label"

    def __post_init__(self):
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            raise SchemaError("duplicate feature names")
        unknown = set(self.protected) - set(names)
        if unknown:
            raise SchemaError(f"protected attributes not in schema: {sorted(unknown)}")

    @property
    def arity(self) -> int:
        return len(self.features)

    @property
    def names(self) -> list[str]:
        return [f.name for f in self.features]

    @property
    def lows(self) -> np.ndarray:
        return np.array([f.lo for f in self.features], dtype=np.int64)

    @property
    def highs(self) -> np.ndarray:
        return np.array([f.hi for f in self.features], dtype=np.int64)

    @property
    def protected_indices(self) -> list[int]:
        return [i for i, f in enumerate(self.features) if f.name in self.protected]

    @property
    def unprotected_indices(self) -> list[int]:
        return [i for i, f in enumerate(self.features) if f.name not in self.protected]

    def index(self, name: str) -> int:
        return self.names.index(name)

    def is_valid(self, instance: Sequence[int]) -> bool:
        if len(instance) != self.arity:
            return False
        return all(f.lo <= v <= f.hi for f, v in zip(self.features, instance))

    def validate(self, instance: Sequence[int]) -> None:
        if len(instance) != self.arity:
            raise ArityMismatch(f"expected {self.arity} values, got {len(instance)}")
        for f, v in zip(self.features, instance):
            if not f.lo <= v <= f.hi:
                raise DomainViolation(f"{f.name}: {v} outside [{f.lo}, {f.hi}]")

    def unprotected_key(self, instance: Sequence[int]) -> Instance:
        """The part of an instance that identifies a test case."""
        return tuple(int(instance[i]) for i in self.unprotected_indices)

    def with_protected(self, names: Iterable[str]) -> FeatureSchema:
        return FeatureSchema(self.features, frozenset(names), self.label)

    def to_dict(self) -> dict:
        return {
            "features": [f.to_dict() for f in self.features],
            "protected": sorted(self.protected, key=self.names.index),
            "label": self.label,
        }

    @classmethod
    def from_dict(cls, d: dict) -> FeatureSchema:
        features = []
        for fd in d["features"]:
            kind = fd.get("kind", "numeric")
            if kind == "categorical":
                labels = tuple(str(x) for x in fd["labels"])
                lo, hi = fd.get("domain", [0, len(labels) - 1])
                features.append(Feature(fd["name"], int(lo), int(hi), kind, labels))
            else:
                if "domain" not in fd:
                    raise SchemaError(f"{fd['name']}: numeric feature needs a domain")
                lo, hi = fd["domain"]
                features.append(Feature(fd["name"], int(lo), int(hi), kind))
        return cls(tuple(features), frozenset(d.get("protected", [])), d.get("label", "label"))


def load_schema(path: str | Path) -> FeatureSchema:
    with open(path, encoding="utf-8") as fh:
        return FeatureSchema.from_dict(json.load(fh))


@dataclass(frozen=True)
class Dataset:
    schema: FeatureSchema
    rows: tuple[Instance, ...]
    labels: tuple[int, ...]
    _matrix: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if len(self.rows) != len(self.labels):
            raise ArityMismatch("rows and labels differ in length")

    def __len__(self):
        return len(self.rows)

    @property
    def X(self) -> np.ndarray:
        if self._matrix is None:
            m = np.array(self.rows, dtype=np.int64).reshape(len(self.rows), self.schema.arity)
            object.__setattr__(self, "_matrix", m)
        return self._matrix

    @property
    def y(self) -> np.ndarray:
        return np.array(self.labels, dtype=np.int64)

    def subset(self, indices: Sequence[int]) -> Dataset:
        return Dataset(self.schema, tuple(self.rows[i] for i in indices),
                       tuple(self.labels[i] for i in indices))


def encode_row(cells: Sequence[str], schema: FeatureSchema) -> Instance:
    if len(cells) != schema.arity:
        raise ArityMismatch(f"expected {schema.arity} feature cells, got {len(cells)}")
    return tuple(f.encode(c) for f, c in zip(schema.features, cells))


def decode(instance: Sequence[int], schema: FeatureSchema) -> list[str]:
    return [f.decode(int(v)) for f, v in zip(schema.features, instance)]


def _encode_label(text: str) -> int:
    text = text.strip()
    if text not in ("0", "1"):
        raise DomainViolation(f"label must be 0 or 1, got {text!r}")
    return int(text)


def load_csv(path: str | Path, schema_path: str | Path | FeatureSchema) -> Dataset:
    schema = schema_path if isinstance(schema_path, FeatureSchema) else load_schema(schema_path)
    rows, labels = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ArityMismatch("missing header row")
        header = [h.strip() for h in header]
        if header[:-1] != schema.names or len(header) != schema.arity + 1:
            raise ArityMismatch(f"header {header} does not match schema {schema.names} + label")
        for lineno, cells in enumerate(reader, start=2):
            if not cells:
                continue
            if len(cells) != schema.arity + 1:
                raise ArityMismatch(f"line {lineno}: expected {schema.arity + 1} cells, got {len(cells)}")
            rows.append(encode_row(cells[:-1], schema))
            labels.append(_encode_label(cells[-1]))
    return Dataset(schema, tuple(rows), tuple(labels))


def write_csv(data: Dataset, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(data.schema.names + [data.schema.label])
        for row, label in zip(data.rows, data.labels):
            w.writerow(decode(row, data.schema) + [label])


def write_schema(schema: FeatureSchema, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(schema.to_dict(), fh, indent=2)
        fh.write("\n")


def random_instance(schema: FeatureSchema, rng: np.random.Generator) -> Instance:
    """Draw each feature uniformly from its domain."""
    return tuple(int(v) for v in rng.integers(schema.lows, schema.highs + 1))


def random_matrix(schema: FeatureSchema, n: int, rng: np.random.Generator) -> np.ndarray:
    return rng.integers(schema.lows, schema.highs + 1, size=(n, schema.arity))
