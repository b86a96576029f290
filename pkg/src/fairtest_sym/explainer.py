"""Decision-tree local surrogates and path extraction.

For one instance we perturb it, label the neighbourhood with the black-box
model, weight samples by proximity and fit a small weighted CART tree. The
root-to-leaf path the instance follows becomes a list of confidence-annotated
threshold predicates.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .constraints import Op, PathConstraint, Predicate
from .schema import FeatureSchema, Instance


class EmptySampleSet(ValueError):
    pass


@dataclass(frozen=True)
class WeightedSample:
    instance: Instance
    label: int
    weight: float

    def __post_init__(self):
        if not 0.0 < self.weight <= 1.0:
            raise ValueError(f"weight {self.weight} outside (0, 1]")
        if self.label not in (0, 1):
            raise ValueError(f"label {self.label} is not binary")


def perturb(center: Sequence[int], schema: FeatureSchema, n: int,
            rng: np.random.Generator, p_keep: float = 0.7) -> np.ndarray:
    """``n`` neighbours of ``center`` as an (n, arity) matrix; row 0 is ``center``.

    Each feature is kept with probability ``p_keep`` and otherwise redrawn
    uniformly from its domain (possibly landing on the same value).
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    center = np.asarray(center, dtype=np.int64)
    fresh = rng.integers(schema.lows, schema.highs + 1, size=(n, schema.arity))
    keep = rng.random((n, schema.arity)) < p_keep
    out = np.where(keep, center, fresh)
    out[0] = center
    return out


def kernel_width(schema: FeatureSchema) -> float:
    return 0.75 * np.sqrt(schema.arity)


def _normalise(X: np.ndarray, schema: FeatureSchema) -> np.ndarray:
    lo = schema.lows.astype(float)
    span = (schema.highs - schema.lows).astype(float)
    span[span == 0] = 1.0
    return (X - lo) / span


def kernel_weights(center: Sequence[int], X: np.ndarray, schema: FeatureSchema) -> np.ndarray:
    c = _normalise(np.asarray(center, dtype=float), schema)
    d2 = ((_normalise(np.asarray(X, dtype=float), schema) - c) ** 2).sum(axis=-1)
    return np.exp(-d2 / kernel_width(schema) ** 2)


def kernel_weight(center: Sequence[int], sample: Sequence[int], schema: FeatureSchema) -> float:
    return float(kernel_weights(center, np.asarray([sample]), schema)[0])


@dataclass
class Node:
    weights: tuple[float, float]
    feature: int | None = None
    threshold: int | None = None
    left: Node | None = None
    right: Node | None = None

    @property
    def is_leaf(self) -> bool:
        return self.feature is None

    @property
    def total(self) -> float:
        return self.weights[0] + self.weights[1]

    @property
    def majority(self) -> int:
        return 1 if self.weights[1] > self.weights[0] else 0

    @property
    def purity(self) -> float:
        return max(self.weights) / self.total

    @property
    def margin(self) -> float:
        return abs(self.weights[1] - self.weights[0]) / self.total

    def to_dict(self) -> dict:
        if self.is_leaf:
            return {"class": self.majority, "weights": list(self.weights)}
        return {"feature": self.feature, "threshold": self.threshold,
                "weights": list(self.weights),
                "left": self.left.to_dict(), "right": self.right.to_dict()}


@dataclass
class SurrogateTree:
    root: Node
    schema: FeatureSchema

    def leaf(self, instance: Sequence[int]) -> Node:
        node = self.root
        while not node.is_leaf:
            node = node.left if instance[node.feature] <= node.threshold else node.right
        return node

    def predict(self, instance: Sequence[int]) -> int:
        return self.leaf(instance).majority

    def nodes(self):
        stack = [self.root]
        while stack:
            node = stack.pop()
            yield node
            if not node.is_leaf:
                stack.extend((node.right, node.left))

    @property
    def depth(self) -> int:
        def walk(node):
            return 0 if node.is_leaf else 1 + max(walk(node.left), walk(node.right))
        return walk(self.root)

    def to_json(self) -> str:
        return json.dumps(self.root.to_dict(), indent=2)

    def to_text(self) -> str:
        lines = []

        def walk(node, indent):
            pad = "  " * indent
            if node.is_leaf:
                lines.append(f"{pad}-> class {node.majority}  (w0={node.weights[0]:.3f}, w1={node.weights[1]:.3f})")
                return
            name = self.schema.names[node.feature]
            lines.append(f"{pad}{name} <= {node.threshold}")
            walk(node.left, indent + 1)
            lines.append(f"{pad}{name} > {node.threshold}")
            walk(node.right, indent + 1)

        walk(self.root, 0)
        return "\n".join(lines)


def _best_split(X, y, w, idx, schema, min_leaf_weight):
    """Best (gain, feature, threshold) at a node, or None.

    Candidate thresholds sit at the floor of the midpoint between consecutive
    distinct observed values; on integers this is the same cut as the midpoint.
    Ties go to the lower feature index, then the lower threshold.
    """
    wn, yn = w[idx], y[idx]
    W = wn.sum()
    W1 = (wn * yn).sum()
    parent = W * 2.0 * (W1 / W) * (1.0 - W1 / W)
    eps = 1e-12 * W
    best = None
    for j, feat in enumerate(schema.features):
        if feat.lo == feat.hi:
            continue
        vals = X[idx, j] - feat.lo
        count = np.bincount(vals, minlength=feat.size)
        observed = np.flatnonzero(count)
        if len(observed) < 2:
            continue
        cum_w = np.cumsum(np.bincount(vals, weights=wn, minlength=feat.size))
        cum_1 = np.cumsum(np.bincount(vals, weights=wn * yn, minlength=feat.size))
        a = observed[:-1]
        wl, w1l = cum_w[a], cum_1[a]
        wr, w1r = W - wl, W1 - w1l
        ok = (wl >= min_leaf_weight) & (wr >= min_leaf_weight)
        if not ok.any():
            continue
        with np.errstate(divide="ignore", invalid="ignore"):
            gl = 2.0 * w1l * (1.0 - w1l / wl)
            gr = 2.0 * w1r * (1.0 - w1r / wr)
        gain = parent - np.nan_to_num(gl) - np.nan_to_num(gr)
        gain[~ok] = -np.inf
        k = int(np.argmax(gain))  # first maximum = lowest threshold
        if best is None or gain[k] > best[0] + eps:
            thr = feat.lo + (int(a[k]) + int(observed[k + 1])) // 2
            best = (float(gain[k]), j, thr)
    if best is None or best[0] <= eps:
        return None
    return best


def fit_tree(X: np.ndarray, y: np.ndarray, w: np.ndarray, schema: FeatureSchema,
             max_depth: int = 6, min_leaf_weight: float = 0.0) -> SurrogateTree:
    """Weighted CART with Gini impurity over integer features."""
    X = np.asarray(X, dtype=np.int64)
    y = np.asarray(y, dtype=np.int64)
    w = np.asarray(w, dtype=float)
    if len(y) == 0 or w.sum() <= 0:
        raise EmptySampleSet("no weighted samples to fit")

    def grow(idx, depth):
        wn = w[idx]
        w1 = float((wn * y[idx]).sum())
        node = Node((float(wn.sum()) - w1, w1))
        if depth >= max_depth or y[idx].min() == y[idx].max():
            return node
        split = _best_split(X, y, w, idx, schema, min_leaf_weight)
        if split is None:
            return node
        _, j, thr = split
        go_left = X[idx, j] <= thr
        node.feature, node.threshold = j, thr
        node.left = grow(idx[go_left], depth + 1)
        node.right = grow(idx[~go_left], depth + 1)
        return node

    return SurrogateTree(grow(np.arange(len(y)), 0), schema)


def fit_tree_samples(samples: Sequence[WeightedSample], schema: FeatureSchema,
                     max_depth: int = 6, min_leaf_weight: float = 0.0) -> SurrogateTree:
    if not samples:
        raise EmptySampleSet("no samples")
    X = np.array([s.instance for s in samples], dtype=np.int64)
    y = np.array([s.label for s in samples], dtype=np.int64)
    w = np.array([s.weight for s in samples], dtype=float)
    return fit_tree(X, y, w, schema, max_depth, min_leaf_weight)


@dataclass(frozen=True)
class DecisionPath:
    predicates: tuple[Predicate, ...]
    leaf_class: int

    @property
    def constraint(self) -> PathConstraint:
        return PathConstraint(self.predicates)

    def __len__(self):
        return len(self.predicates)


CONFIDENCE_MEASURES = ("margin", "purity", "effect")


def _rate(node: Node) -> float:
    return node.weights[1] / node.total


def node_confidence(node: Node, measure: str = "margin", parent: Node | None = None) -> float:
    """Confidence attached to the predicate that leads from ``parent`` into ``node``.

    ``purity`` is the weighted share of the node's majority class; with two
    classes it never drops below 0.5. ``margin`` rescales it onto [0, 1]
    (``2 * purity - 1``), so a coin-flip child scores 0 and a pure one 1.
    ``effect`` is the gap in class-1 rate between the two children of
    ``parent``: how much the split moves the decision at all.
    """
    if measure == "purity":
        return node.purity
    if measure == "margin":
        return node.margin
    if measure == "effect":
        return abs(_rate(parent.left) - _rate(parent.right))
    raise ValueError(f"unknown confidence measure {measure!r}")


def extract_path(tree: SurrogateTree, instance: Sequence[int], measure: str = "margin") -> DecisionPath:
    protected = set(tree.schema.protected_indices)
    preds = []
    node = tree.root
    while not node.is_leaf:
        j, thr, parent = node.feature, node.threshold, node
        if instance[j] <= thr:
            op, node = Op.LE, node.left
        else:
            op, node = Op.GT, node.right
        preds.append(Predicate(j, op, thr, min(1.0, node_confidence(node, measure, parent)), j in protected))
    return DecisionPath(tuple(preds), node.majority)


class LocalExplainer:
    """Fit a fresh surrogate around each instance it is asked about.

    Explanations are not stable across calls: the neighbourhood is resampled
    from ``rng`` every time.
    """

    def __init__(self, model, schema: FeatureSchema, n_samples: int = 1000,
                 p_keep: float = 0.7, max_depth: int = 6, min_leaf_frac: float = 0.01,
                 confidence: str = "margin"):
        if confidence not in CONFIDENCE_MEASURES:
            raise ValueError(f"unknown confidence measure {confidence!r}")
        self.model = model
        self.schema = schema
        self.n_samples = n_samples
        self.p_keep = p_keep
        self.max_depth = max_depth
        self.min_leaf_frac = min_leaf_frac
        self.confidence = confidence

    def surrogate(self, instance: Sequence[int], rng: np.random.Generator) -> SurrogateTree:
        X = perturb(instance, self.schema, self.n_samples, rng, self.p_keep)
        y = self.model.predict_batch(X)
        w = kernel_weights(instance, X, self.schema)
        return fit_tree(X, y, w, self.schema, self.max_depth, self.min_leaf_frac * w.sum())

    def __call__(self, instance: Sequence[int], rng: np.random.Generator) -> DecisionPath:
        tree = self.surrogate(instance, rng)
        path = extract_path(tree, instance, self.confidence)
        assert path.constraint.holds(instance)
        return path
