"""``topoconverge`` command line: ``analyze``, ``ph`` and ``train-demo``.

Exit codes: 0 success, 2 bad input or configuration, 3 capacity exceeded.
Every output file is rendered in memory first and written via temp file +
rename, so a failing command leaves no partial outputs behind.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import fields
from pathlib import Path
from typing import Dict, List, Optional

from . import diagrams as dg
from .errors import CapacityExceeded, TopoError
from .flag_complex import CELL_BUDGET_ENV, build_flag_complex, default_cell_budget
from .graph import NormalizationParams, build_graph
from .monitor import DISTANCE_KINDS, PipelineConfig, analyze_run
from .persistence import compute_persistence, diagrams_to_rows
from .snapshot_io import atomic_write_bytes, read_metrics, read_snapshot, render_csv
from .trainer import DATASETS, TrainConfig, train

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_CAPACITY = 3

log = logging.getLogger("topoconverge")


class _HelpFormatter(argparse.ArgumentDefaultsHelpFormatter):
    def _get_help_string(self, action):
        if action.default is None or action.required:
            return action.help
        return super()._get_help_string(action)


def _add_pipeline_args(p: argparse.ArgumentParser, distance: bool = True) -> None:
    d = PipelineConfig.__dataclass_fields__
    g = p.add_argument_group("pipeline")
    if distance:
        g.add_argument("--distance", dest="distance_kind", choices=DISTANCE_KINDS,
                       default=d["distance_kind"].default, help="distance between consecutive diagrams")
    g.add_argument("--max-dim", type=int, default=d["max_dim"].default, help="highest homology degree")
    g.add_argument("--eta", type=float, default=d["eta"].default,
                   help="drop intervals with lifespan below this")
    g.add_argument("--inf-replacement", type=float, default=d["inf_replacement"].default,
                   help="value substituted for infinite deaths")
    g.add_argument("--n-bins", type=int, default=d["n_bins"].default, help="samples per grid axis on [0, 1]")
    g.add_argument("--sigma", type=float, default=d["sigma"].default, help="heat kernel bandwidth")
    g.add_argument("--power", type=float, default=d["power"].default, help="silhouette weight exponent")
    g.add_argument("--wasserstein-p", type=float, default=d["wasserstein_p"].default,
                   help="order of the Wasserstein distance")
    g.add_argument("--correlation-points", type=int, default=d["correlation_points"].default,
                   help="resampled points used for the Pearson correlation")
    g.add_argument("--zeta", type=float, default=d["zeta"].default,
                   help="smallest normalized edge value")
    g.add_argument("--cell-budget", type=int, default=None,
                   help=f"maximum cells per complex (default: ${CELL_BUDGET_ENV} or "
                        f"{default_cell_budget()})")


def _pipeline_config(args) -> PipelineConfig:
    names = {f.name for f in fields(PipelineConfig)}
    kwargs = {k: v for k, v in vars(args).items() if k in names and v is not None}
    return PipelineConfig(**kwargs)


def build_parser() -> argparse.ArgumentParser:
    fmt = _HelpFormatter
    parser = argparse.ArgumentParser(
        prog="topoconverge",
        description="Persistent homology of MLP weight snapshots and homological convergence.",
        formatter_class=fmt,
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", formatter_class=fmt,
                       help="distances between consecutive snapshots vs. validation accuracy")
    a.add_argument("--snapshots", required=True, type=Path, help="directory of step_*.nnph files")
    a.add_argument("--metrics", required=True, type=Path, help="CSV with header step,val_accuracy")
    a.add_argument("--out", type=Path, default=Path("."), help="directory for the report CSVs")
    a.add_argument("--jobs", type=int, default=None,
                   help="parallel snapshot workers (default: available CPUs)")
    _add_pipeline_args(a)
    a.set_defaults(func=cmd_analyze)

    p = sub.add_parser("ph", formatter_class=fmt, help="persistence diagrams of one snapshot")
    p.add_argument("--snapshot", required=True, type=Path, help="an .nnph file")
    p.add_argument("--out", type=Path, default=Path("."), help="output directory")
    p.add_argument("--dump-cells", action="store_true", help="also write the flag complex to cells.txt")
    p.add_argument("--vectors", action="store_true",
                   help="also write silhouette and heat samples of the cleaned diagrams")
    _add_pipeline_args(p, distance=False)
    p.set_defaults(func=cmd_ph)

    t = sub.add_parser("train-demo", formatter_class=fmt, help="train a toy MLP and write snapshots")
    td = TrainConfig()
    t.add_argument("--out", required=True, type=Path, help="directory for snapshots and metrics.csv")
    t.add_argument("--dataset", choices=DATASETS, default=td.dataset)
    t.add_argument("--hidden", default=",".join(map(str, td.hidden_sizes)),
                   help="comma-separated hidden layer sizes")
    t.add_argument("--dropout", type=float, default=td.dropout)
    t.add_argument("--lr", type=float, default=td.lr)
    t.add_argument("--batch-size", type=int, default=td.batch_size)
    t.add_argument("--epochs", type=int, default=td.epochs)
    t.add_argument("--seed", type=int, default=td.seed)
    t.add_argument("--shuffle-seed", type=int, default=None, help="override the shuffling stream only")
    t.add_argument("--snapshot-every", type=int, default=td.snapshot_every, help="batches between snapshots")
    t.add_argument("--n-samples", type=int, default=td.n_samples)
    t.set_defaults(func=cmd_train_demo)
    return parser


def _write_all(outputs: Dict[Path, str]) -> None:
    for path, text in outputs.items():
        path.parent.mkdir(parents=True, exist_ok=True)
        atomic_write_bytes(path, text.encode())


def cmd_analyze(args) -> int:
    cfg = _pipeline_config(args)
    metrics = read_metrics(args.metrics)
    report = analyze_run(args.snapshots, metrics, cfg, jobs=args.jobs)
    out = args.out
    _write_all({
        out / "report.csv": render_csv(("step", "distance", "cumulative"), report.report_rows()),
        out / "summary.csv": render_csv(
            ("pearson_r", "n_points", "distance_kind"),
            [(report.pearson_r, report.n_points, report.distance_kind)],
        ),
        out / "curves.csv": render_csv(
            ("progress", "cum_distance_norm", "val_accuracy_norm"), report.normalized_curves()
        ),
    })
    print(f"pearson_r={report.pearson_r!r} n_points={report.n_points} distance={report.distance_kind}")
    return EXIT_OK


def cmd_ph(args) -> int:
    cfg = _pipeline_config(args)
    state = read_snapshot(args.snapshot)
    g = build_graph(state, NormalizationParams(cfg.zeta))
    cx = build_flag_complex(g, top_dim=cfg.max_dim + 1, cell_budget=cfg.cell_budget)
    diagrams = compute_persistence(cx, cfg.max_dim, cell_budget=cfg.cell_budget)
    header = ("dim", "birth", "death")
    out = args.out
    outputs = {out / "diagram.csv": render_csv(header, diagrams_to_rows(diagrams))}
    for d in diagrams:
        outputs[out / f"diagram_h{d.dim}.csv"] = render_csv(header, diagrams_to_rows([d]))
    if args.dump_cells:
        outputs[out / "cells.txt"] = cx.dump()
    if args.vectors:
        for d in diagrams:
            c = dg.clean(d, cfg.eta, cfg.inf_replacement)
            curve = dg.silhouette(c, cfg.power, cfg.n_bins) if len(c) else dg.zero_silhouette(cfg.power, cfg.n_bins)
            outputs[out / f"silhouette_h{d.dim}.csv"] = render_csv(
                ("t", "value"), zip(curve.grid.tolist(), curve.values.tolist())
            )
            img = dg.heat(c, cfg.sigma, cfg.n_bins)
            rows = (
                (x, y, img.values[i, j])
                for i, x in enumerate(img.grid.tolist())
                for j, y in enumerate(img.grid.tolist())
            )
            outputs[out / f"heat_h{d.dim}.csv"] = render_csv(
                ("x", "y", "value"), ((x, y, float(v)) for x, y, v in rows)
            )
    _write_all(outputs)
    counts = ", ".join(f"H{d.dim}: {len(d)}" for d in diagrams)
    print(f"{args.snapshot}: {len(cx)} cells; intervals {counts}")
    return EXIT_OK


def cmd_train_demo(args) -> int:
    try:
        hidden = [int(h) for h in args.hidden.split(",") if h.strip()]
    except ValueError:
        raise ValueError(f"--hidden expects comma-separated integers, got {args.hidden!r}") from None
    cfg = TrainConfig(
        hidden_sizes=hidden,
        dropout=args.dropout,
        lr=args.lr,
        batch_size=args.batch_size,
        epochs=args.epochs,
        seed=args.seed,
        dataset=args.dataset,
        snapshot_every=args.snapshot_every,
        n_samples=args.n_samples,
        shuffle_seed=args.shuffle_seed,
    )
    if cfg.lr == 0:
        print("warning: --lr 0 never changes the weights; every snapshot will be identical",
              file=sys.stderr)
    metrics = train(cfg, args.out)
    print(f"final validation accuracy {metrics.accuracies[-1]:.4f} "
          f"after {metrics.steps[-1]} steps; outputs in {args.out}")
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CapacityExceeded as exc:
        print(f"error: capacity exceeded: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (TopoError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
