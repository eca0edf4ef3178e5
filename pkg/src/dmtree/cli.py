"""Command-line interface: generate streams, run evaluations, inspect trees.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal invariant
violation (a breached update-rule guarantee discovered after a run).
"""

from __future__ import annotations

import argparse
import json
import os
import platform
import sys

import numpy as np
import scipy
import sklearn

from . import __version__
from .classifier import DynamicModelTreeClassifier
from .evaluation import prequential_run, records_to_csv
from .streams import (
    N_CONCEPTS,
    DriftEvent,
    DriftSchedule,
    GeneratorConfig,
    export_stream_csv,
    generate,
    ingest_csv,
)
from .tree import AuditError, parse_tree_dump

USAGE_ERROR = 1
DATA_ERROR = 2
INTERNAL_ERROR = 3


class _Parser(argparse.ArgumentParser):
    """argparse with the documented usage-error exit code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_ERROR)


def _atomic_write(path, text: str) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as handle:
        handle.write(text)
    os.replace(tmp, path)


def _parse_drifts(text: str, n_concepts: int) -> DriftSchedule:
    """Comma-separated drift points; ``a-b`` ramps across a window."""
    events = []
    for i, token in enumerate(text.split(",")):
        token = token.strip()
        if "-" in token:
            start, end = (int(part) for part in token.split("-", 1))
        else:
            start = end = int(token)
        events.append(DriftEvent(start, end, (i + 1) % n_concepts))
    return DriftSchedule(tuple(events))


def _generator_config(args, emit_concept_ids: bool) -> GeneratorConfig:
    schedule = None
    if args.drifts:
        schedule = _parse_drifts(args.drifts, N_CONCEPTS[args.kind])
    return GeneratorConfig(
        kind=args.kind,
        n_samples=args.n,
        batch_size=args.gen_batch_size,
        noise_probability=args.noise,
        seed=args.seed,
        schedule=schedule,
        n_features=args.features,
        drift_magnitude=args.drift_mag,
        emit_concept_ids=emit_concept_ids,
    )


def _add_generator_flags(parser, require_kind: bool) -> None:
    parser.add_argument("--kind", choices=sorted(N_CONCEPTS),
                        required=require_kind,
                        help="synthetic stream family")
    parser.add_argument("--n", type=int, default=100_000,
                        help="number of samples to generate")
    parser.add_argument("--drifts", default=None,
                        help="comma-separated drift points; 'a-b' ramps "
                             "incrementally across the window")
    parser.add_argument("--noise", type=float, default=0.1,
                        help="per-sample probability of redrawing one feature")
    parser.add_argument("--seed", type=int, default=0,
                        help="generator seed")
    parser.add_argument("--features", type=int, default=50,
                        help="feature count (hyperplane only)")
    parser.add_argument("--drift-mag", type=float, default=0.001,
                        help="per-step weight drift magnitude (hyperplane)")
    parser.add_argument("--gen-batch-size", type=int, default=1000,
                        help="generation chunk size (part of the stream "
                             "definition)")


def _build_parser() -> _Parser:
    parser = _Parser(prog="dmtree",
                     description="Model-tree learning on data streams")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a synthetic stream as CSV")
    _add_generator_flags(gen, require_kind=True)
    gen.add_argument("--concept-column", action="store_true",
                     help="append a concept-id debug column")
    gen.add_argument("--out", required=True, help="output CSV path")
    gen.set_defaults(handler=cmd_generate)

    run = sub.add_parser("run", help="prequential evaluation of a stream")
    run.add_argument("--stream", help="CSV stream to ingest (alternative "
                                      "to --kind)")
    _add_generator_flags(run, require_kind=False)
    run.add_argument("--label-col", default="label")
    run.add_argument("--exclude", action="append", default=[],
                     help="CSV column to ignore (repeatable)")
    run.add_argument("--categorical", default=None,
                     help="comma-separated feature indices to split with "
                          "equality tests (CSV streams; inferred for "
                          "string columns and generated streams)")
    run.add_argument("--batch-frac", type=float, default=None,
                     help="batch size as a fraction of the stream "
                          "(default 0.001)")
    run.add_argument("--batch-rows", type=int, default=None,
                     help="batch size as a fixed row count")
    run.add_argument("--shuffle", action="store_true",
                     help="seeded shuffle of CSV rows before batching")
    run.add_argument("--lr", type=float, default=0.05)
    run.add_argument("--epsilon", type=float, default=1e-7)
    run.add_argument("--candidate-cap", type=int, default=None)
    run.add_argument("--replacement-frac", type=float, default=0.5)
    run.add_argument("--max-depth", type=int, default=None)
    run.add_argument("--f1-average", choices=["macro", "binary", "micro"],
                     default="macro")
    run.add_argument("--param-convention", choices=["reported", "internal"],
                     default="reported")
    run.add_argument("--no-timing", action="store_true",
                     help="record elapsed as 0.0 for byte-reproducible output")
    run.add_argument("--out-dir", required=True)
    run.set_defaults(handler=cmd_run)

    ins = sub.add_parser("inspect", help="render a tree dump")
    ins.add_argument("dump", help="tree dump written by 'run'")
    ins.set_defaults(handler=cmd_inspect)
    return parser


def cmd_generate(args) -> int:
    config = _generator_config(args, emit_concept_ids=args.concept_column)
    tmp = f"{args.out}.tmp"
    rows = export_stream_csv(generate(config), tmp,
                             include_concept_ids=args.concept_column)
    os.replace(tmp, args.out)
    print(f"wrote {rows} rows, {config.feature_count} features, "
          f"2 classes to {args.out}")
    return 0


def _resolve_stream(args):
    """Returns (batches, n_features, n_classes, categorical, source_desc)."""
    if args.stream:
        batch_fraction = args.batch_frac
        if batch_fraction is None and args.batch_rows is None:
            batch_fraction = 0.001
        batches, schema = ingest_csv(
            args.stream, label_column=args.label_col,
            batch_size=args.batch_rows, batch_fraction=batch_fraction,
            exclude_columns=tuple(args.exclude),
            shuffle_seed=args.seed if args.shuffle else None)
        categorical = list(schema.categorical_features)
        if args.categorical:
            categorical = sorted(set(categorical) | {
                int(tok) for tok in args.categorical.split(",")})
        return (batches, schema.n_features, schema.n_classes,
                tuple(categorical), args.stream)
    if not args.kind:
        raise ValueError("run needs either --stream or --kind")
    config = _generator_config(args, emit_concept_ids=False)
    if args.batch_frac is not None or args.batch_rows is not None:
        batch = args.batch_rows or max(1, int(config.n_samples
                                              * args.batch_frac))
        if batch < 1:
            raise ValueError("batch size must be at least 1")
        config.batch_size = batch
    return (generate(config), config.feature_count, 2,
            config.categorical_features, f"{args.kind} generator")


def cmd_run(args) -> int:
    if bool(args.stream) == bool(args.kind):
        print("dmtree run: error: exactly one of --stream or --kind is "
              "required", file=sys.stderr)
        return USAGE_ERROR
    batches, n_features, n_classes, categorical, source = _resolve_stream(args)
    learner = DynamicModelTreeClassifier(
        n_features=n_features,
        n_classes=n_classes,
        learning_rate=args.lr,
        epsilon=args.epsilon,
        candidate_cap=args.candidate_cap,
        replacement_fraction=args.replacement_frac,
        max_depth=args.max_depth,
        categorical_features=categorical,
    )
    timer = (lambda: 0.0) if args.no_timing else None
    kwargs = {} if timer is None else {"timer": timer}
    records = prequential_run(learner, batches, n_classes,
                              f1_average=args.f1_average,
                              param_convention=args.param_convention,
                              **kwargs)
    learner.tree_.verify_audit()

    os.makedirs(args.out_dir, exist_ok=True)
    _atomic_write(os.path.join(args.out_dir, "metrics.csv"),
                  records_to_csv(records))
    _atomic_write(os.path.join(args.out_dir, "tree.json"),
                  learner.tree_.dumps() + "\n")
    manifest = {
        "source": source,
        "config": {
            key: value for key, value in sorted(vars(args).items())
            if key not in ("handler", "command")
        },
        "seed": args.seed,
        "versions": {
            "dmtree": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "scikit-learn": sklearn.__version__,
        },
    }
    _atomic_write(os.path.join(args.out_dir, "manifest.json"),
                  json.dumps(manifest, indent=2, default=str) + "\n")

    f1 = np.array([r.f1 for r in records])
    report = learner.describe()
    print(f"iterations {len(records)} | "
          f"F1 {f1.mean():.4f} +/- {f1.std():.4f} | "
          f"mean splits {np.mean([r.n_splits for r in records]):.2f} | "
          f"mean parameters {np.mean([r.n_parameters for r in records]):.1f} | "
          f"final tree: {report['n_inner']} inner, {report['n_leaves']} "
          f"leaves, depth {report['depth']}")
    return 0


def _render_node(data, by_id, node_id, depth, lines) -> None:
    record = by_id[node_id]
    indent = "  " * depth
    stats = record["stats"]
    seen = f"n={stats['count']}" if stats else "n=?"
    if record["kind"] == "inner":
        test = record["test"]
        op = "==" if test["op"] == "eq" else "<="
        lines.append(f"{indent}inner#{node_id} x{test['feature']} {op} "
                     f"{test['value']:.6g} {seen}")
        _render_node(data, by_id, record["left"], depth + 1, lines)
        _render_node(data, by_id, record["right"], depth + 1, lines)
    else:
        weights = np.abs(np.asarray(record["weights"]))[:, :-1].sum(axis=0)
        top = np.argsort(-weights, kind="stable")[:3]
        ranked = ", ".join(f"f{int(j)}" for j in top)
        lines.append(f"{indent}leaf#{node_id} {seen} top|w|: {ranked}")


def cmd_inspect(args) -> int:
    with open(args.dump, encoding="utf-8") as handle:
        data = parse_tree_dump(handle.read())
    by_id = {record["id"]: record for record in data["nodes"]}
    lines: list[str] = []
    _render_node(data, by_id, data["root"], 0, lines)
    n_inner = data["n_inner"]
    n_leaves = data["n_leaves"]
    print(f"nodes: {n_inner} inner, {n_leaves} leaves, depth {data['depth']}")
    for line in lines:
        print(line)
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except AuditError as exc:
        print(f"internal invariant violation: {exc}", file=sys.stderr)
        return INTERNAL_ERROR
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA_ERROR


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
