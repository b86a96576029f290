"""Symbolic test generation for individual discrimination.

The loop pops the best-ranked input, checks it for discrimination, asks the
local explainer for the decision path it follows, and toggles predicates on
that path to derive new inputs:

* directed expansion (only after a hit) toggles one low-confidence predicate
  and keeps the rest of the path, to stay inside the discriminating region;
* undirected expansion toggles high-confidence predicates under their prefix,
  to reach different regions.

Lower priority values are dequeued first. Directed items sit below seeds,
which sit below undirected items.
"""

from __future__ import annotations

import heapq
import itertools
import json
import logging
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import constraints
from .constraints import PathConstraint, VisitedSet, toggle
from .explainer import DecisionPath, LocalExplainer
from .fairness import NoProtectedAttributes, check_for_error_condition, protected_combinations
from .report import RunReport, Source
from .schema import Dataset, FeatureSchema, Instance, random_instance

log = logging.getLogger(__name__)


class TooFewRows(ValueError):
    pass


@dataclass(frozen=True)
class SearchConfig:
    limit: int = 1000
    t1: float = 0.3
    t2: float = 0.2
    rank_directed: float = 0.0
    rank_seed: float = 2.0
    rank_undirected: float = 4.0
    num_clusters: int = 4
    rng_seed: int = 0
    directed: bool = True
    undirected: bool = True
    seed_order: str = "roundrobin"
    seed_source: str = "training"
    n_samples: int = 1000
    p_keep: float = 0.7
    max_depth: int = 6
    min_leaf_frac: float = 0.01
    confidence: str = "margin"
    checkpoint_every: int = 50
    protected_cap: int = 10_000

    def __post_init__(self):
        if not (0.0 <= self.t1 <= 1.0 and 0.0 <= self.t2 <= 1.0):
            raise ValueError("thresholds must lie in [0, 1]")
        # r is in [0, 1]: directed items land in [rd - 1, rd], undirected in [ru, ru + 1]
        if not self.rank_directed < self.rank_seed < self.rank_undirected:
            raise ValueError("ranks must satisfy rank_directed < rank_seed < rank_undirected")
        if self.limit < 0 or self.num_clusters < 1:
            raise ValueError("limit must be >= 0 and num_clusters >= 1")
        if self.seed_order not in ("roundrobin", "iterative"):
            raise ValueError(f"unknown seed order {self.seed_order!r}")
        if self.seed_source not in ("training", "random"):
            raise ValueError(f"unknown seed source {self.seed_source!r}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> SearchConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_file(cls, path: str | Path) -> SearchConfig:
        path = Path(path)
        if path.suffix == ".toml":
            try:
                import tomllib
            except ModuleNotFoundError:  # Python < 3.11
                import tomli as tomllib
            with open(path, "rb") as fh:
                return cls.from_dict(tomllib.load(fh))
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class RankedInput:
    instance: Instance
    priority: float
    source: Source


class RankedQueue:
    """Min-priority queue, first-in first-out among equal priorities."""

    def __init__(self):
        self._heap = []
        self._seq = itertools.count()

    def push(self, instance: Instance, source: Source, priority: float) -> None:
        if not np.isfinite(priority):
            raise ValueError("priority must be finite")
        item = RankedInput(tuple(instance), float(priority), source)
        heapq.heappush(self._heap, (item.priority, next(self._seq), item))

    def pop(self) -> RankedInput:
        return heapq.heappop(self._heap)[2]

    def __len__(self):
        return len(self._heap)

    def __bool__(self):
        return bool(self._heap)


# kmeans ------------------------------------------------------------------


def _normalised(data: Dataset) -> np.ndarray:
    lo = data.schema.lows.astype(float)
    span = (data.schema.highs - data.schema.lows).astype(float)
    span[span == 0] = 1.0
    return (data.X - lo) / span


def _kmeanspp(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    centroids = [X[rng.integers(len(X))]]
    d2 = ((X - centroids[0]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = d2.sum()
        i = rng.integers(len(X)) if total <= 0 else rng.choice(len(X), p=d2 / total)
        centroids.append(X[i])
        d2 = np.minimum(d2, ((X - X[i]) ** 2).sum(axis=1))
    return np.array(centroids, dtype=float)


def kmeans(data: Dataset, k: int, rng: np.random.Generator,
           max_iter: int = 100, tol: float = 1e-6) -> list[list[int]]:
    """Lloyd's algorithm on domain-normalised rows with k-means++ seeding.

    Returns ``k`` lists of row indices (some may be empty), each in dataset order.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if len(data) < k:
        raise TooFewRows(f"{len(data)} rows cannot form {k} clusters")
    X = _normalised(data)
    centroids = _kmeanspp(X, k, rng)
    for _ in range(max_iter):
        dist = ((X[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        assign = dist.argmin(axis=1)
        moved = 0.0
        for j in range(k):
            members = X[assign == j]
            if len(members):
                new = members.mean(axis=0)
                moved = max(moved, float(np.abs(new - centroids[j]).max()))
                centroids[j] = new
        if moved < tol:
            break
    dist = ((X[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    assign = dist.argmin(axis=1)
    return [np.flatnonzero(assign == j).tolist() for j in range(k)]


def round_robin(clusters: Sequence[Sequence], limit: int | None = None) -> list:
    """First member of every cluster, then every second member, and so on."""
    out = []
    depth = max((len(c) for c in clusters), default=0)
    for i in range(depth):
        for cluster in clusters:
            if i >= len(cluster):
                continue
            if limit is not None and len(out) >= limit:
                return out
            out.append(cluster[i])
    return out


def seed_test_inputs(data: Dataset, cfg: SearchConfig,
                     rng: np.random.Generator | None = None) -> list[Instance]:
    rng = rng if rng is not None else np.random.default_rng([cfg.rng_seed, 1])
    if cfg.seed_source == "random":
        return [random_instance(data.schema, rng) for _ in range(cfg.limit)]
    if len(data) == 0:
        return []
    if cfg.seed_order == "iterative":
        return list(data.rows[:cfg.limit])
    clusters = kmeans(data, min(cfg.num_clusters, len(data)), rng)
    return [data.rows[i] for i in round_robin(clusters, cfg.limit)]


# main loop ---------------------------------------------------------------


@dataclass
class SearchState:
    schema: FeatureSchema
    rng: np.random.Generator
    queue: RankedQueue = field(default_factory=RankedQueue)
    visited: VisitedSet | None = None
    generated: dict[Instance, bool] = field(default_factory=dict)
    count: int = 0
    report: RunReport = field(default_factory=RunReport)

    def __post_init__(self):
        if self.visited is None:
            self.visited = VisitedSet(self.schema)

    def try_enqueue(self, pc: PathConstraint, source: Source, priority_of: Callable[[float], float]) -> bool:
        if not self.visited.add(pc):
            return False
        instance = constraints.solve(pc, self.schema, self.rng)
        if instance is None:
            return False
        self.queue.push(instance, source, priority_of(pc.mean_confidence()))
        return True


def directed_expand(t: Instance, path: DecisionPath, state: SearchState, cfg: SearchConfig) -> int:
    """Toggle each low-confidence unprotected predicate, keeping the rest of the path."""
    preds = path.predicates
    added = 0
    for i, c in enumerate(preds):
        if c.is_protected:
            continue
        if c.confidence < cfg.t2:
            pc = PathConstraint(preds[:i] + (toggle(c),) + preds[i + 1:])
            added += state.try_enqueue(pc, Source.DIRECTED, lambda r: cfg.rank_directed - r)
    return added


def undirected_expand(t: Instance, path: DecisionPath, state: SearchState, cfg: SearchConfig) -> int:
    """Toggle confident unprotected predicates under their prefix, dropping the suffix."""
    prefix: tuple = ()
    added = 0
    for c in path.predicates:
        if c.is_protected:
            continue
        if c.confidence < cfg.t1:
            break
        pc = PathConstraint(prefix + (toggle(c),))
        added += state.try_enqueue(pc, Source.UNDIRECTED, lambda r: cfg.rank_undirected + r)
        prefix = prefix + (c,)
    return added


Explainer = Callable[[Instance, np.random.Generator], DecisionPath]


def run(model, data: Dataset, cfg: SearchConfig = SearchConfig(),
        explainer: Explainer | None = None) -> RunReport:
    schema = data.schema
    if not schema.protected_indices:
        raise NoProtectedAttributes("a fairness run needs at least one protected attribute")
    combos = protected_combinations(schema, cfg.protected_cap)
    if explainer is None:
        explainer = LocalExplainer(model, schema, cfg.n_samples, cfg.p_keep, cfg.max_depth,
                                   cfg.min_leaf_frac, cfg.confidence)
    state = SearchState(schema, np.random.default_rng([cfg.rng_seed, 0]))
    report = state.report
    report.config = cfg.to_dict()
    started = time.perf_counter()

    for seed in seed_test_inputs(data, cfg):
        state.queue.push(seed, Source.SEED, cfg.rank_seed)
    log.info("queued %d seed inputs", len(state.queue))

    while state.count < cfg.limit and state.queue:
        item = state.queue.pop()
        t = item.instance
        key = schema.unprotected_key(t)
        if key in state.generated:
            found = state.generated[key]
        else:
            res = check_for_error_condition(t, model, schema, combos)
            found = state.generated[key] = res.found
            report.probes += res.probes
            report.record(item.source, found)
            if found:
                report.witnesses.append(res.witness)
        if (found and cfg.directed) or cfg.undirected:
            path = explainer(t, state.rng)
            if found and cfg.directed:
                directed_expand(t, path, state, cfg)
            if cfg.undirected:
                undirected_expand(t, path, state, cfg)
        state.count += 1
        if cfg.checkpoint_every and state.count % cfg.checkpoint_every == 0:
            report.checkpoint(state.count)
        log.debug("step %d: %s %s found=%s queue=%d", state.count, item.source.value, t, found,
                  len(state.queue))

    if not report.checkpoints or report.checkpoints[-1][0] != state.count:
        report.checkpoint(state.count)
    report.duration = time.perf_counter() - started
    report.check()
    log.info("symbolic run: %d dequeued, %d generated, %d discriminatory",
             state.count, report.total.gen, report.total.indi)
    return report
