"""Threshold predicates, path constraints and their box solver.

Predicates come from axis-aligned tree splits, so any conjunction of them is
an integer box. Solving is interval intersection followed by uniform sampling
inside the box; features the constraint does not mention range over their
whole domain.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .schema import FeatureSchema, Instance


class Op(str, Enum):
    LE = "<="
    GT = ">"


@dataclass(frozen=True)
class Predicate:
    feature: int
    op: Op
    threshold: int
    confidence: float = 1.0
    is_protected: bool = False

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")

    def holds(self, instance: Sequence[int]) -> bool:
        v = instance[self.feature]
        return v <= self.threshold if self.op is Op.LE else v > self.threshold

    def interval(self, lo: int, hi: int) -> tuple[int, int]:
        """The part of ``[lo, hi]`` this predicate admits."""
        if self.op is Op.LE:
            return lo, min(hi, self.threshold)
        return max(lo, self.threshold + 1), hi

    def describe(self, schema: FeatureSchema | None = None) -> str:
        name = schema.names[self.feature] if schema else f"x{self.feature}"
        return f"{name} {self.op.value} {self.threshold}"


def toggle(c: Predicate) -> Predicate:
    return replace(c, op=Op.GT if c.op is Op.LE else Op.LE)


@dataclass(frozen=True)
class PathConstraint:
    predicates: tuple[Predicate, ...] = ()

    def __iter__(self):
        return iter(self.predicates)

    def __len__(self):
        return len(self.predicates)

    def holds(self, instance: Sequence[int]) -> bool:
        return all(c.holds(instance) for c in self.predicates)

    def mean_confidence(self) -> float:
        if not self.predicates:
            return 0.0
        return sum(c.confidence for c in self.predicates) / len(self.predicates)

    def __and__(self, other: PathConstraint | Predicate) -> PathConstraint:
        if isinstance(other, Predicate):
            return PathConstraint(self.predicates + (other,))
        return PathConstraint(self.predicates + other.predicates)


@dataclass(frozen=True)
class IntervalBox:
    intervals: tuple[tuple[int, int], ...]

    @property
    def is_empty(self) -> bool:
        return any(lo > hi for lo, hi in self.intervals)

    def contains(self, instance: Sequence[int]) -> bool:
        return all(lo <= v <= hi for (lo, hi), v in zip(self.intervals, instance))

    def key(self, schema: FeatureSchema) -> tuple:
        """Sorted (feature, lo, hi) triples for features narrower than their domain.

        Every empty box denotes the same (empty) set of inputs and shares a key.
        """
        if self.is_empty:
            return ("UNSAT",)
        return tuple((i, lo, hi) for i, ((lo, hi), f) in enumerate(zip(self.intervals, schema.features))
                     if (lo, hi) != (f.lo, f.hi))

    def to_json(self, schema: FeatureSchema) -> str:
        return json.dumps({name: list(iv) for name, iv in zip(schema.names, self.intervals)})


def canonicalize(pc: PathConstraint | Iterable[Predicate], schema: FeatureSchema) -> IntervalBox:
    bounds = [[f.lo, f.hi] for f in schema.features]
    for c in pc:
        b = bounds[c.feature]
        b[0], b[1] = c.interval(b[0], b[1])
    return IntervalBox(tuple((lo, hi) for lo, hi in bounds))


UNSAT = None


def solve(pc: PathConstraint, schema: FeatureSchema, rng: np.random.Generator) -> Instance | None:
    """Sample a satisfying instance uniformly from the constraint's box.

    Returns ``UNSAT`` (None) when the box is empty.
    """
    box = canonicalize(pc, schema)
    if box.is_empty:
        return UNSAT
    lo = np.array([iv[0] for iv in box.intervals], dtype=np.int64)
    hi = np.array([iv[1] for iv in box.intervals], dtype=np.int64)
    instance = tuple(int(v) for v in rng.integers(lo, hi + 1))
    assert pc.holds(instance), "solver produced a non-satisfying instance"
    return instance


class VisitedSet:
    """Constraints already handed to the solver, compared by their boxes."""

    def __init__(self, schema: FeatureSchema):
        self.schema = schema
        self._keys: set[tuple] = set()

    def __len__(self):
        return len(self._keys)

    def __contains__(self, pc: PathConstraint) -> bool:
        return canonicalize(pc, self.schema).key(self.schema) in self._keys

    def add(self, pc: PathConstraint) -> bool:
        """Insert; returns False if an equal constraint was already present."""
        key = canonicalize(pc, self.schema).key(self.schema)
        if key in self._keys:
            return False
        self._keys.add(key)
        return True
