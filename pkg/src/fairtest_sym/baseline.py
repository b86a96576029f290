"""Random test generation with duplicate removal (the comparison generator)."""

from __future__ import annotations

import logging
import time

import numpy as np

from .fairness import check_for_error_condition, protected_combinations
from .report import RunReport, Source
from .schema import FeatureSchema, random_instance

log = logging.getLogger(__name__)


def random_baseline(model, schema: FeatureSchema, limit: int, rng: np.random.Generator,
                    checkpoint_every: int = 50, protected_cap: int = 10_000) -> RunReport:
    """Check uniformly drawn inputs until ``limit`` unique tests have been run.

    Inputs that agree on every unprotected feature count as one test. Gives up
    after ``50 * limit`` draws so that tiny domains terminate.
    """
    if limit < 1:
        raise ValueError("limit must be at least 1")
    combos = protected_combinations(schema, protected_cap)
    report = RunReport(config={"generator": "random", "limit": limit})
    seen = set()
    started = time.perf_counter()
    draws = 0
    while len(seen) < limit and draws < 50 * limit:
        t = random_instance(schema, rng)
        draws += 1
        key = schema.unprotected_key(t)
        if key in seen:
            continue
        seen.add(key)
        res = check_for_error_condition(t, model, schema, combos)
        report.probes += res.probes
        report.record(Source.RANDOM, res.found)
        if res.found:
            report.witnesses.append(res.witness)
        if checkpoint_every and len(seen) % checkpoint_every == 0:
            report.checkpoint(len(seen))
    if not report.checkpoints or report.checkpoints[-1][0] != len(seen):
        report.checkpoint(len(seen))
    report.duration = time.perf_counter() - started
    report.check()
    log.info("random run: %d draws, %d unique, %d discriminatory", draws, len(seen), report.total.indi)
    return report
