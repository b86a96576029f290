"""Individual-discrimination check for a single test input."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

from .schema import FeatureSchema, Instance


class CombinationExplosion(ValueError):
    pass


class NoProtectedAttributes(ValueError):
    pass


@dataclass(frozen=True)
class DiscriminationResult:
    found: bool
    witness: tuple[Instance, Instance] | None = None
    classes: tuple[int, int] | None = None
    probes: int = 0


def protected_combinations(schema: FeatureSchema, cap: int = 10_000) -> list[tuple[int, ...]]:
    """Every assignment of the protected attributes, in lexicographic order."""
    idx = schema.protected_indices
    if not idx:
        raise NoProtectedAttributes("schema has no protected attributes")
    size = 1
    for i in idx:
        size *= schema.features[i].size
    if size > cap:
        raise CombinationExplosion(
            f"{size} protected-value combinations exceed the cap of {cap}; coarsen the protected domains")
    ranges = [range(schema.features[i].lo, schema.features[i].hi + 1) for i in idx]
    return list(itertools.product(*ranges))


def substitute(t: Sequence[int], indices: Sequence[int], values: Sequence[int]) -> Instance:
    out = list(t)
    for i, v in zip(indices, values):
        out[i] = v
    return tuple(int(v) for v in out)


def check_for_error_condition(t: Sequence[int], model, schema: FeatureSchema,
                              combos: list[tuple[int, ...]] | None = None) -> DiscriminationResult:
    """Does changing only protected values of ``t`` change the model's decision?

    Stops at the first mismatch. ``t``'s own protected assignment is not
    re-queried. ``probes`` counts model calls including the one for ``t``.
    """
    t = tuple(int(v) for v in t)
    idx = schema.protected_indices
    if combos is None:
        combos = protected_combinations(schema)
    own = tuple(t[i] for i in idx)
    base = int(model.predict(t))
    probes = 1
    for values in combos:
        if values == own:
            continue
        t_new = substitute(t, idx, values)
        cls = int(model.predict(t_new))
        probes += 1
        if cls != base:
            return DiscriminationResult(True, (t, t_new), (base, cls), probes)
    return DiscriminationResult(False, None, None, probes)

