"""Synthetic credit-style data with a tunable dependence on a protected attribute."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .schema import Dataset, Feature, FeatureSchema


def synth_schema() -> FeatureSchema:
    return FeatureSchema(
        (
            Feature("age", 1, 9),
            Feature("income", 0, 10),
            Feature("gender", 0, 1, "categorical", ("F", "M")),
            Feature("noise_1", 0, 9),
            Feature("noise_2", 0, 9),
            Feature("noise_3", 0, 9),
        ),
        frozenset({"gender"}),
        "approved",
    )


def label_probability(income, gender, beta: float):
    z = income - 5.0 + 4.0 * beta * (gender - 0.5)
    return 1.0 / (1.0 + np.exp(-z))


def _labelled(X: np.ndarray, beta: float, rng: np.random.Generator) -> Dataset:
    p = label_probability(X[:, 1], X[:, 2], beta)
    y = (rng.random(len(X)) < p).astype(np.int64)
    return Dataset(synth_schema(), tuple(tuple(int(v) for v in row) for row in X),
                   tuple(int(v) for v in y))


def synth_biased_dataset(beta: float, n: int, rng: np.random.Generator) -> Dataset:
    """Uniform features; ``P(approved) = sigmoid(income - 5 + 4*beta*(gender - 1/2))``.

    ``beta = 0`` makes the label independent of gender.
    """
    if not 0.0 <= beta <= 1.0:
        raise ValueError("beta must lie in [0, 1]")
    if n < 100:
        raise ValueError("n must be at least 100")
    schema = synth_schema()
    X = rng.integers(schema.lows, schema.highs + 1, size=(n, schema.arity))
    return _labelled(X, beta, rng)


# (age, income, noise_1, noise_2, noise_3) centres of the clustered variant.
# Blobs sit at domain corners so that, after normalisation, any two of them are
# further apart than the two gender values; only the last one straddles the
# income band where gender flips the label.
CLUSTER_CENTRES = (
    (1.0, 10.0, 0.0, 0.0, 0.0),
    (9.0, 0.0, 9.0, 9.0, 0.0),
    (9.0, 9.0, 0.0, 9.0, 9.0),
    (1.0, 5.0, 9.0, 0.0, 9.0),
)


def synth_clustered_dataset(beta: float, sizes: Sequence[int], rng: np.random.Generator,
                            spread: float = 1.0,
                            centres: Sequence[Sequence[float]] = CLUSTER_CENTRES) -> Dataset:
    """Blobs of rows stored one cluster after another, in the order given.

    Gender is uniform within every blob; the label rule matches
    :func:`synth_biased_dataset`.
    """
    if len(sizes) > len(centres):
        raise ValueError("more cluster sizes than centres")
    schema = synth_schema()
    lo, hi = schema.lows, schema.highs
    blocks = []
    for size, centre in zip(sizes, centres):
        c = np.asarray(centre, dtype=float)
        other = np.rint(c + rng.normal(0.0, spread, size=(size, len(c))))
        gender = rng.integers(0, 2, size=size)
        block = np.column_stack([other[:, :2], gender, other[:, 2:]]).astype(np.int64)
        blocks.append(np.clip(block, lo, hi))
    return _labelled(np.vstack(blocks), beta, rng)
