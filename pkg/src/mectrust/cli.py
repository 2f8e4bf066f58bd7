"""Command line entry point: ``mectrust <subcommand>``.

Exit codes: 0 success, 1 validation error, 2 solver convergence failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import dataprep, synthetic
from .admm import AdmmConfig
from .dataprep import PartitionManifest, Schema
from .harness import METHODS, RunReport, SweepSpec, aggregate_csv, render_report, run_experiment, run_sweep
from .svm import ConvergenceError
from .topology import MecTopology, generate_topology

EXIT_OK, EXIT_INVALID, EXIT_CONVERGENCE = 0, 1, 2


def _range(text):
    lo, hi = (int(v) for v in text.split(","))
    return lo, hi


def _load_config(path) -> AdmmConfig:
    if path is None:
        return AdmmConfig()
    return AdmmConfig.from_dict(json.loads(Path(path).read_text()))


def cmd_topology(args):
    topo = generate_topology(args.nodes, args.k, args.seed)
    topo.save(args.out)
    print(f"wrote {args.out}: {topo.n_nodes} nodes, {len(topo.edges)} edges")


def cmd_synth(args):
    devices = synthetic.make_devices(args.devices, args.rows, args.features, args.shift, seed=args.seed)
    synthetic.write_csv(devices, args.out, seed=args.seed)
    print(f"wrote {len(devices)} device files and schema.json to {args.out}")


def cmd_prepare(args):
    schema = Schema.load(args.schema)
    topo = MecTopology.load(args.topology)
    devices = dataprep.load_directory(args.data, schema)
    manifest = dataprep.build_partition(
        devices, topo, args.seed, known_range=args.known_range, lesser_range=args.lesser_range,
        lesser_fraction=args.lesser_fraction, n_communities=args.communities, tau=args.tau,
        dataset_name=schema.name,
    )
    path = manifest.save(args.out)
    print(f"wrote {path}: {len(manifest.nodes)} nodes, {manifest.feature_dim} features, "
          f"{manifest.pooled_train_count} training rows")


def cmd_train(args):
    topo = MecTopology.load(args.topology)
    manifest = PartitionManifest.load(args.manifest)
    config = _load_config(args.config)
    report = run_experiment(args.method, topo, manifest, config, args.seed, trace_path=args.trace,
                            raise_errors=True)
    report.save(args.out)
    print(f"{args.method}: mean accuracy {report.mean_accuracy:.4f}, rounds {report.rounds}, "
          f"{report.wall_time_seconds:.2f}s")


def cmd_sweep(args):
    doc = json.loads(Path(args.spec).read_text())
    config = AdmmConfig.from_dict(doc.pop("config", {}))
    out = Path(args.out or doc.pop("out", "sweep_out"))
    doc.pop("out", None)
    spec = SweepSpec(**doc)
    reports = run_sweep(spec, config)
    out.mkdir(parents=True, exist_ok=True)
    for k, r in enumerate(reports):
        r.save(out / f"report_{k:04d}_{r.method}.json")
    (out / "aggregate.csv").write_text(aggregate_csv(reports))
    failed = [r for r in reports if r.status != "ok"]
    print(f"wrote {len(reports)} reports and aggregate.csv to {out}")
    if failed:
        print(f"{len(failed)} runs failed", file=sys.stderr)
        return EXIT_CONVERGENCE


def cmd_report(args):
    paths = sorted(Path(args.inp).glob("*.json"))
    reports = [RunReport.load(p) for p in paths]
    sys.stdout.write(render_report(reports, args.format))


def build_parser():
    p = argparse.ArgumentParser(prog="mectrust", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("topology", help="generate a k-nearest-neighbour MEC topology")
    t.add_argument("--nodes", type=int, required=True)
    t.add_argument("--k", type=int, default=4)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out", required=True)
    t.set_defaults(func=cmd_topology)

    s = sub.add_parser("synth", help="write synthetic device CSVs and their schema")
    s.add_argument("--devices", type=int, default=5)
    s.add_argument("--rows", type=int, default=400)
    s.add_argument("--features", type=int, default=50)
    s.add_argument("--shift", type=float, default=0.7)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_synth)

    d = sub.add_parser("prepare", help="curate CSV data into per-node datasets")
    d.add_argument("--data", required=True)
    d.add_argument("--schema", required=True)
    d.add_argument("--topology", required=True)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--out", required=True)
    d.add_argument("--known-range", type=_range, default=(1000, 20000))
    d.add_argument("--lesser-range", type=_range, default=(100, 500))
    d.add_argument("--lesser-fraction", type=float, default=0.15)
    d.add_argument("--communities", type=int, default=None)
    d.add_argument("--tau", type=float, default=0.3)
    d.set_defaults(func=cmd_prepare)

    r = sub.add_parser("train", help="train one method and write a run report")
    r.add_argument("--method", choices=METHODS, required=True)
    r.add_argument("--topology", required=True)
    r.add_argument("--manifest", required=True)
    r.add_argument("--config", default=None)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--out", required=True)
    r.add_argument("--trace", default=None)
    r.set_defaults(func=cmd_train)

    w = sub.add_parser("sweep", help="run a node-count or data-fraction sweep")
    w.add_argument("--spec", required=True)
    w.add_argument("--out", default=None)
    w.set_defaults(func=cmd_sweep)

    o = sub.add_parser("report", help="tabulate run reports from a directory")
    o.add_argument("--in", dest="inp", required=True)
    o.add_argument("--format", choices=("csv", "markdown"), default="csv")
    o.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args) or EXIT_OK
    except ConvergenceError as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (ValueError, KeyError, TypeError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
