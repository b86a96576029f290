"""Rerun the synthetic experiments and write CSV summaries.

    python3 scripts/run_experiments.py --out results/ --seeds 5

Experiments:
  compare     symbolic vs random on the beta=0.8 benchmark
  ablation    full vs --no-directed vs --no-undirected
  confidence  the three confidence measures side by side
  clustering  round-robin vs iterative seeds on the clustered dataset,
              with per-checkpoint #InDi curves
"""

import argparse
import csv
import dataclasses
import time
from pathlib import Path
from statistics import median

import numpy as np

from fairtest_sym.baseline import random_baseline
from fairtest_sym.models import train_logistic
from fairtest_sym.report import SOURCES
from fairtest_sym.search import SearchConfig, run
from fairtest_sym.synth import synth_biased_dataset, synth_clustered_dataset


def rate(report):
    return report.success_rate or 0.0


def write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def per_source(report):
    return {s.value: (report.counts[s].gen, report.counts[s].indi) for s in SOURCES if report.counts[s].gen}


def biased_setup(seed, beta, n):
    data = synth_biased_dataset(beta, n, np.random.default_rng(seed))
    return data, train_logistic(data)


def compare(args, out):
    rows = []
    for s in range(args.seeds):
        data, model = biased_setup(s, args.beta, args.n)
        cfg = SearchConfig(limit=args.limit, rng_seed=s)
        sym = run(model, data, cfg)
        rnd = random_baseline(model, data.schema, args.limit, np.random.default_rng(s))
        rows.append([s, sym.total.gen, sym.total.indi, f"{rate(sym):.4f}",
                     rnd.total.gen, rnd.total.indi, f"{rate(rnd):.4f}"])
        print(f"seed {s}: symbolic {per_source(sym)}  random {per_source(rnd)}")
    write_rows(out / "compare.csv", ["seed", "sym_gen", "sym_indi", "sym_rate",
                                     "rnd_gen", "rnd_indi", "rnd_rate"], rows)
    sym_m, rnd_m = median(float(r[3]) for r in rows), median(float(r[6]) for r in rows)
    print(f"median success: symbolic {sym_m:.3f}, random {rnd_m:.3f}, ratio {sym_m / rnd_m:.2f}")


def ablation(args, out):
    variants = {"full": {}, "no_directed": {"directed": False}, "no_undirected": {"undirected": False}}
    rows = []
    for s in range(args.seeds):
        data, model = biased_setup(s, args.beta, args.n)
        base = SearchConfig(limit=args.limit, rng_seed=s)
        for name, change in variants.items():
            report = run(model, data, dataclasses.replace(base, **change))
            rows.append([s, name, report.total.gen, report.total.indi, f"{rate(report):.4f}"])
    write_rows(out / "ablation.csv", ["seed", "variant", "gen", "indi", "rate"], rows)
    for name in variants:
        print(f"{name:>14}: median success {median(float(r[4]) for r in rows if r[1] == name):.3f}")


def confidence(args, out):
    rows = []
    for s in range(args.seeds):
        data, model = biased_setup(s, args.beta, args.n)
        for measure in ("margin", "purity", "effect"):
            report = run(model, data, SearchConfig(limit=args.limit, rng_seed=s, confidence=measure))
            c = per_source(report)
            rows.append([s, measure, report.total.gen, report.total.indi, f"{rate(report):.4f}",
                         c.get("Directed", (0, 0))[0], c.get("Undirected", (0, 0))[0]])
    write_rows(out / "confidence.csv",
               ["seed", "measure", "gen", "indi", "rate", "directed_gen", "undirected_gen"], rows)
    for measure in ("margin", "purity", "effect"):
        sel = [r for r in rows if r[1] == measure]
        print(f"{measure:>7}: median success {median(float(r[4]) for r in sel):.3f}, "
              f"directed inputs {[r[5] for r in sel]}")


def clustering(args, out):
    rows, curves = [], []
    for s in range(args.seeds):
        data = synth_clustered_dataset(args.beta, (600, 400, 300, 200), np.random.default_rng(100 + s))
        model = train_logistic(data)
        for order in ("roundrobin", "iterative"):
            report = run(model, data, SearchConfig(limit=600, seed_order=order, rng_seed=s,
                                                   checkpoint_every=20))
            rows.append([s, order, report.total.gen, report.total.indi])
            curves.extend([s, order, *cp] for cp in report.checkpoints)
    write_rows(out / "clustering.csv", ["seed", "order", "gen", "indi"], rows)
    write_rows(out / "clustering_checkpoints.csv", ["seed", "order", "tests", "gen", "indi"], curves)
    for order in ("roundrobin", "iterative"):
        print(f"{order:>10}: #InDi per seed {[r[3] for r in rows if r[1] == order]}")


EXPERIMENTS = {"compare": compare, "ablation": ablation, "confidence": confidence, "clustering": clustering}


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("experiments", nargs="*", metavar="experiment",
                   help=f"any of {', '.join(EXPERIMENTS)} (default: all)")
    p.add_argument("--out", type=Path, default=Path("results"))
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--beta", type=float, default=0.8)
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--limit", type=int, default=1000)
    args = p.parse_args()
    unknown = set(args.experiments) - set(EXPERIMENTS)
    if unknown:
        p.error(f"unknown experiments: {', '.join(sorted(unknown))}")
    args.out.mkdir(parents=True, exist_ok=True)
    for name in args.experiments or EXPERIMENTS:
        print(f"== {name}")
        started = time.perf_counter()
        EXPERIMENTS[name](args, args.out)
        print(f"   ({time.perf_counter() - started:.0f} s)")


if __name__ == "__main__":
    main()
