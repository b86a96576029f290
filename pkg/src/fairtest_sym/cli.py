"""``fairtest-sym`` command line.

Exit status: 0 when the run completed, 1 on usage or input errors, 2 when an
external model breaks the wire protocol.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .baseline import random_baseline
from .models import ExternalModel, ExternalModelConfig, LogisticModel, ProtocolError, train_logistic
from .report import RunReport, checkpoints_csv, emit_report
from .schema import FeatureSchema, load_csv, load_schema, write_csv, write_schema
from .search import SearchConfig, run
from .synth import synth_biased_dataset, synth_clustered_dataset

log = logging.getLogger("fairtest_sym")

EXIT_OK, EXIT_USAGE, EXIT_PROTOCOL = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _configure_logging():
    level = os.environ.get("FAIRTEST_LOG", "error").upper()
    if level not in ("ERROR", "INFO", "DEBUG"):
        level = "ERROR"
    logging.basicConfig(level=getattr(logging, level), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def _add_model_args(p):
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--model", type=Path, help="logistic model JSON written by `train`")
    g.add_argument("--model-cmd", help="command serving the model over JSON lines")
    p.add_argument("--model-timeout-ms", type=int, default=5000)


def _add_output_args(p):
    p.add_argument("--out", type=Path, help="report path (stdout if omitted)")
    p.add_argument("--format", choices=("json", "csv", "text"), default="json")
    p.add_argument("--timing", action="store_true", help="include wall-clock time in the report")
    p.add_argument("--checkpoints-out", type=Path, help="CSV of cumulative counts per checkpoint")


def _add_search_args(p):
    p.add_argument("--config", type=Path, help="JSON or TOML run file with SearchConfig fields")
    p.add_argument("--limit", type=int)
    p.add_argument("--t1", type=float)
    p.add_argument("--t2", type=float)
    p.add_argument("--clusters", type=int, dest="num_clusters")
    p.add_argument("--rng", type=int, dest="rng_seed")
    p.add_argument("--no-directed", action="store_false", dest="directed", default=None)
    p.add_argument("--no-undirected", action="store_false", dest="undirected", default=None)
    p.add_argument("--seed-order", choices=("roundrobin", "iterative"))
    p.add_argument("--seed-source", choices=("training", "random"))
    p.add_argument("--confidence", choices=("margin", "purity", "effect"))
    p.add_argument("--samples", type=int, dest="n_samples", help="perturbation samples per explanation")
    p.add_argument("--checkpoint-every", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fairtest-sym", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", help="fit a logistic model from CSV + schema")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--schema", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--l2", type=float, default=1.0)
    p.add_argument("--max-iter", type=int, default=1000)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--test-frac", type=float, default=0.0,
                   help="hold out this fraction of rows and report accuracy on it")
    p.add_argument("--rng", type=int, default=0)

    for name, text in (("generate", "symbolic test generation"),
                       ("compare", "symbolic and random generation, merged report")):
        p = sub.add_parser(name, help=text)
        p.add_argument("--data", type=Path, required=True)
        p.add_argument("--schema", type=Path, required=True)
        p.add_argument("--protected", nargs="+", help="override the schema's protected attributes")
        _add_model_args(p)
        _add_search_args(p)
        _add_output_args(p)

    p = sub.add_parser("baseline", help="random test generation")
    p.add_argument("--schema", type=Path, required=True)
    p.add_argument("--protected", nargs="+")
    _add_model_args(p)
    p.add_argument("--limit", type=int, default=1000)
    p.add_argument("--rng", type=int, default=0)
    p.add_argument("--checkpoint-every", type=int, default=50)
    _add_output_args(p)

    p = sub.add_parser("synth", help="write a synthetic biased dataset")
    p.add_argument("--beta", type=float, default=0.8)
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--cluster-sizes", help="comma-separated sizes for the clustered variant")
    p.add_argument("--rng", type=int, default=0)
    p.add_argument("--out-data", type=Path, required=True)
    p.add_argument("--out-schema", type=Path, required=True)
    return parser


def _search_config(args) -> SearchConfig:
    cfg = SearchConfig.from_file(args.config) if args.config else SearchConfig()
    names = ("limit", "t1", "t2", "num_clusters", "rng_seed", "directed", "undirected",
             "seed_order", "seed_source", "confidence", "n_samples", "checkpoint_every")
    overrides = {n: getattr(args, n) for n in names if getattr(args, n) is not None}
    return dataclasses.replace(cfg, **overrides)


def _schema(args) -> FeatureSchema:
    schema = load_schema(args.schema)
    if args.protected:
        schema = schema.with_protected(args.protected)
    if not schema.protected:
        raise UsageError("no protected attributes: set them in the schema or pass --protected")
    return schema


def _open_model(args):
    if args.model is not None:
        return LogisticModel.load(args.model)
    return ExternalModel(ExternalModelConfig(args.model_cmd, args.model_timeout_ms))


def _write(args, report: RunReport) -> None:
    payload = emit_report(report, args.format, include_timing=args.timing)
    if args.out:
        args.out.write_bytes(payload)
    else:
        sys.stdout.buffer.write(payload)
        sys.stdout.flush()
    if args.checkpoints_out:
        args.checkpoints_out.write_bytes(checkpoints_csv(report))


def cmd_train(args) -> int:
    data = load_csv(args.data, args.schema)
    train_idx = np.arange(len(data))
    test_idx = np.array([], dtype=int)
    if args.test_frac > 0:
        perm = np.random.default_rng(args.rng).permutation(len(data))
        n_test = int(round(args.test_frac * len(data)))
        test_idx, train_idx = np.sort(perm[:n_test]), np.sort(perm[n_test:])
    model = train_logistic(data.subset(train_idx), args.l2, args.max_iter, args.tol)
    model.save(args.out)
    train_acc = float((model.predict_batch(data.X[train_idx]) == data.y[train_idx]).mean())
    msg = f"trained on {len(train_idx)} rows, train accuracy {train_acc:.3f}"
    if len(test_idx):
        test_acc = float((model.predict_batch(data.X[test_idx]) == data.y[test_idx]).mean())
        msg += f", held-out accuracy {test_acc:.3f} on {len(test_idx)} rows"
    print(msg, file=sys.stderr)
    return EXIT_OK


def cmd_generate(args) -> int:
    schema = _schema(args)
    data = load_csv(args.data, schema)
    cfg = _search_config(args)
    model = _open_model(args)
    try:
        report = run(model, data, cfg)
    finally:
        if isinstance(model, ExternalModel):
            model.close()
    _write(args, report)
    return EXIT_OK


def cmd_baseline(args) -> int:
    schema = _schema(args)
    model = _open_model(args)
    try:
        report = random_baseline(model, schema, args.limit, np.random.default_rng(args.rng),
                                 args.checkpoint_every)
    finally:
        if isinstance(model, ExternalModel):
            model.close()
    _write(args, report)
    return EXIT_OK


def cmd_compare(args) -> int:
    schema = _schema(args)
    data = load_csv(args.data, schema)
    cfg = _search_config(args)
    model = _open_model(args)
    try:
        symbolic = run(model, data, cfg)
        random = random_baseline(model, schema, cfg.limit, np.random.default_rng(cfg.rng_seed),
                                 cfg.checkpoint_every, cfg.protected_cap)
    finally:
        if isinstance(model, ExternalModel):
            model.close()
    s, r = symbolic.success_rate, random.success_rate
    if s is not None and r:
        print(f"symbolic/random success ratio: {s / r:.2f}", file=sys.stderr)
    _write(args, symbolic.merge(random))
    return EXIT_OK


def cmd_synth(args) -> int:
    rng = np.random.default_rng(args.rng)
    if args.cluster_sizes:
        sizes = [int(x) for x in args.cluster_sizes.split(",")]
        data = synth_clustered_dataset(args.beta, sizes, rng)
    else:
        data = synth_biased_dataset(args.beta, args.n, rng)
    write_csv(data, args.out_data)
    write_schema(data.schema, args.out_schema)
    return EXIT_OK


COMMANDS = {"train": cmd_train, "generate": cmd_generate, "baseline": cmd_baseline,
            "compare": cmd_compare, "synth": cmd_synth}


def main(argv=None) -> int:
    _configure_logging()
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ProtocolError as exc:
        print(f"fairtest-sym: model protocol failure: {exc}", file=sys.stderr)
        return EXIT_PROTOCOL
    except (UsageError, ValueError, OSError, KeyError) as exc:
        print(f"fairtest-sym: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
