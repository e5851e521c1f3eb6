"""Command line entry point: ``threestage run | sweep | bench-apsp``."""

from __future__ import annotations

import argparse
import logging
import sys

from threestage import pipeline
from threestage.pipeline import ExperimentConfig


def _ints(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def _add_experiment_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML experiment file; flags below override it")
    p.add_argument("--name")
    g = p.add_argument_group("dataset")
    g.add_argument("--data", dest="path", help="data file (CSV: rows=features, columns=points; or IDX images)")
    g.add_argument("--format", choices=["csv", "idx"])
    g.add_argument("--labels", help="ground-truth labels (IDX vector or one per line)")
    g.add_argument("--pca-dim", type=int)
    g.add_argument("--max-points", type=int, help="use only the first N points of a data file")
    g.add_argument("--n-subspaces", type=int)
    g.add_argument("--sub-dim", type=int)
    g.add_argument("--ambient-dim", type=int)
    g.add_argument("--points", dest="points_per_subspace", type=int, help="points per subspace")
    g.add_argument("--noise", dest="noise_sigma", type=float)
    g = p.add_argument_group("representation")
    g.add_argument("--representation", choices=pipeline.REPRESENTATIONS)
    g.add_argument("--k-max", type=int, help="OMP sparsity budget")
    g.add_argument("--residual-tol", type=float, help="OMP residual stopping threshold")
    g.add_argument("--lam", type=float, help="LSR ridge weight")
    g.add_argument("--affinity", choices=["sum", "half"])
    g = p.add_argument_group("gbto")
    g.add_argument("--gbto", choices=pipeline.GBTO_MODES)
    g.add_argument("--transform", choices=["reciprocal", "log"])
    g.add_argument("--zero-floor", type=float)
    g = p.add_argument_group("spectral / metrics")
    g.add_argument("--k", type=int, help="number of clusters (default: number of true labels)")
    g.add_argument("--kmeans-restarts", type=int)
    g.add_argument("--seed", type=int, help="run a single seed")
    g.add_argument("--seeds", type=_ints, help="comma-separated seeds")
    g.add_argument("--trials", type=int, help="use seeds 0..trials-1")
    g.add_argument("--connectivity-scope", choices=["cluster", "graph"])
    g.add_argument("--nmi-average", choices=["geometric", "arithmetic"])
    g.add_argument("--no-timing", dest="timing", action="store_false", default=None,
                   help="leave timing columns blank (byte-reproducible output)")
    g.add_argument("--workers", type=int)
    p.add_argument("-o", "--output", help="CSV output path")


_SKIP = {"command", "func", "config", "seed", "trials", "axis", "values", "methods", "plot", "verbose"}


def build_config(args: argparse.Namespace) -> ExperimentConfig:
    cfg = pipeline.load_config(args.config) if args.config else ExperimentConfig()
    overrides = {k: v for k, v in vars(args).items() if k not in _SKIP and v is not None}
    if args.seed is not None:
        overrides["seeds"] = [args.seed]
    elif args.trials is not None:
        overrides["seeds"] = list(range(args.trials))
    if "path" in overrides:
        # a data file replaces any synthetic source from the config
        overrides.setdefault("format", None)
    cfg = cfg.replace(**overrides)
    cfg.validate()
    return cfg


def _print_rows(rows, fields):
    sys.stdout.write(pipeline.rows_to_csv(rows, fields))


def cmd_run(args) -> int:
    cfg = build_config(args)
    rows = pipeline.run_experiment(cfg)
    if not cfg.output:
        _print_rows(rows, pipeline.CSV_FIELDS)
    return 0 if any(r.get("status") == "ok" for r in rows) else 1


def cmd_sweep(args) -> int:
    cfg = build_config(args)
    methods = [m for m in args.methods.split(",") if m] if args.methods else None
    rows = pipeline.sweep(cfg, args.axis, args.values, methods, plot_path=args.plot)
    if not cfg.output:
        _print_rows(rows, pipeline.SWEEP_FIELDS)
    return 0


def cmd_bench(args) -> int:
    rows = pipeline.bench_apsp(args.sizes, args.kernels.split(","), args.repeats, args.seed)
    fields = ["n", "kernel", "seconds", "speedup", "max_abs_diff"]
    if args.output:
        pipeline.write_csv(args.output, rows, fields)
    _print_rows(rows, fields)
    return 0


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="threestage", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one experiment over its seeds")
    _add_experiment_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="repeat an experiment along one parameter axis")
    _add_experiment_flags(p)
    p.add_argument("--axis", required=True, choices=pipeline.SWEEP_AXES)
    p.add_argument("--values", required=True, type=_floats)
    p.add_argument("--methods", help="comma-separated representation:mode pairs, e.g. lsr:off,lsr:hard")
    p.add_argument("--plot", help="plot-data output (default: <output>.dat)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("bench-apsp", help="time shortest-path kernels against the reference loop")
    p.add_argument("--sizes", type=_ints, default=[128, 512, 1024])
    p.add_argument("--kernels", default="reference,rows,blocked")
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"threestage: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
