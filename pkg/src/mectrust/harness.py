"""End-to-end experiments: train a method, score it per node, sweep and tabulate."""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import baselines
from .admm import AdmmConfig, bootstrap
from .dataprep import subsample_training
from .model import SvmParams, TrustModel, classify
from .svm import ConvergenceError
from .synthetic import desk_partition

logger = logging.getLogger(__name__)

PROPOSED = "proposed"
METHODS = (PROPOSED, baselines.GLOBAL, baselines.LOCAL)
ASSUMPTIONS = ("communication overhead between MEC and cloud layers is treated as negligible; "
               "wall_time_seconds covers training only")
REPORT_COLUMNS = ("method", "value", "mean_accuracy", "rounds", "wall_time_seconds", "seed")


def desk_config(**overrides) -> AdmmConfig:
    """Hyperparameters used for the desk-scale surrogate experiments.

    Per-sample hinge cost 1 and a two-stage gamma schedule (1e-3, 3e-3); with
    fusion weights of order ``gamma * n / d`` larger gammas collapse every
    node onto one consensus model.
    """
    params = dict(rho=1.0, gamma_ini=1e-3, gamma_inc=3.0, gamma_th=3e-3, svm=SvmParams(1.0))
    params.update(overrides)
    return AdmmConfig(**params)


@dataclass
class RunReport:
    method: str
    config: dict
    seed: int
    per_node_accuracy: list[float] = field(default_factory=list)
    mean_accuracy: float = float("nan")
    rounds: int = 0
    wall_time_seconds: float = 0.0
    manifest_digest: str = ""
    trace_path: str | None = None
    excluded_nodes: list[int] = field(default_factory=list)
    n_nodes: int = 0
    pooled_train_count: int = 0
    stages: list[dict] = field(default_factory=list)
    weights: list[list[float]] = field(default_factory=list)
    variable: str | None = None
    value: float | None = None
    # slots for externally produced comparison numbers
    external: dict = field(default_factory=dict)
    status: str = "ok"
    error: str | None = None
    assumptions: str = ASSUMPTIONS

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> RunReport:
        return cls(**doc)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))

    @classmethod
    def load(cls, path) -> RunReport:
        return cls.from_dict(json.loads(Path(path).read_text()))


def evaluate(models, manifest):
    """Per-node test accuracy with each node's own model (or one shared model).

    Nodes without test samples are skipped. Returns
    ``(per_node_accuracy, mean_accuracy, excluded_node_ids)``; the mean is
    unweighted over scored nodes.
    """
    shared = isinstance(models, TrustModel) or (isinstance(models, np.ndarray) and models.ndim == 1)
    acc, excluded = [], []
    for i, node in enumerate(manifest.nodes):
        if node.n_test == 0:
            excluded.append(node.node_id)
            continue
        model = models if shared else models[i]
        acc.append(float(np.mean(classify(model, node.X_test) == node.y_test)))
    if not acc:
        raise ValueError("every node has an empty test set")
    return acc, float(np.mean(acc)), excluded


def run_experiment(method, topology, manifest, config: AdmmConfig | None = None, seed=0,
                   trace_path=None, raise_errors=False) -> RunReport:
    """Train ``method`` on the partition and fill a :class:`RunReport`.

    Training failures yield a report with ``status="failed"`` unless
    ``raise_errors`` is set.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    config = config or AdmmConfig()
    report = RunReport(method, config.to_dict(), int(seed), manifest_digest=manifest.digest(),
                       n_nodes=len(manifest.nodes), pooled_train_count=manifest.pooled_train_count,
                       trace_path=str(trace_path) if trace_path else None)
    try:
        start = time.perf_counter()
        if method == PROPOSED:
            stage_log = []

            def on_stage(gamma, W):
                stage_log.append({"gamma": gamma, "mean_accuracy": evaluate(W, manifest)[1]
                                  if any(n.n_test for n in manifest.nodes) else None})

            result = bootstrap(topology, manifest, config, trace_path=trace_path, on_stage=on_stage)
            report.wall_time_seconds = time.perf_counter() - start
            models = [TrustModel(w) for w in result.W]
            report.rounds = result.rounds
            for log, st in zip(stage_log, result.stages):
                log.update(iterations=st.iterations, converged=st.converged,
                           primal_residual_norm=st.primal_residual_norm,
                           dual_residual_norm=st.dual_residual_norm)
            report.stages = stage_log
            report.weights = result.W.tolist()
        elif method == baselines.GLOBAL:
            models, report.rounds = baselines.train_global(manifest, config.svm, config.w_solver_tol,
                                                           config.w_solver_max_iters)
            report.wall_time_seconds = time.perf_counter() - start
            report.weights = [models.w.tolist()]
        else:
            models, report.rounds = baselines.train_local(manifest, config.svm, config.w_solver_tol,
                                                          config.w_solver_max_iters, config.workers)
            report.wall_time_seconds = time.perf_counter() - start
            report.weights = [m.w.tolist() for m in models]
        report.per_node_accuracy, report.mean_accuracy, report.excluded_nodes = evaluate(models, manifest)
    except (ConvergenceError, ValueError) as exc:
        if raise_errors:
            raise
        logger.error("%s run failed: %s", method, exc)
        report.status = "failed"
        report.error = f"{type(exc).__name__}: {exc}"
    return report


# ---------------------------------------------------------------------------
# sweeps


@dataclass
class SweepSpec:
    variable: str
    values: list
    repeats: int = 1
    methods: list[str] = field(default_factory=lambda: list(METHODS))
    seeds: list[int] | None = None
    n_nodes: int = 15
    dataset: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.variable not in ("node_count", "data_fraction"):
            raise ValueError(f"unknown sweep variable {self.variable!r}")
        if not self.values or any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ValueError("sweep values must be non-empty and strictly increasing")
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise ValueError(f"unknown methods {sorted(unknown)}")
        if self.seeds is None:
            self.seeds = list(range(self.repeats))
        if len(self.seeds) < self.repeats:
            raise ValueError("need at least one seed per repeat")


def run_sweep(spec: SweepSpec, config: AdmmConfig | None = None) -> list[RunReport]:
    """Run every (value, seed, method) cell on the synthetic desk-scale surrogate."""
    config = config or AdmmConfig()
    reports = []
    for value in spec.values:
        for seed in spec.seeds[: spec.repeats]:
            if spec.variable == "node_count":
                topo, manifest = desk_partition(n_nodes=int(value), seed=seed, **spec.dataset)
            else:
                topo, manifest = desk_partition(n_nodes=spec.n_nodes, seed=seed, **spec.dataset)
                manifest = subsample_training(manifest, float(value), seed=seed)
            for method in spec.methods:
                report = run_experiment(method, topo, manifest, config, seed)
                report.variable, report.value = spec.variable, value
                reports.append(report)
    return reports


def aggregate(reports: list[RunReport]) -> list[dict]:
    """Mean and standard deviation per (method, value) over successful runs."""
    cells: dict[tuple, list[RunReport]] = {}
    for r in reports:
        if r.status == "ok":
            cells.setdefault((r.method, r.value), []).append(r)
    rows = []
    for (method, value), group in sorted(cells.items(), key=lambda kv: (kv[0][0], _sortable(kv[0][1]))):
        acc = np.array([r.mean_accuracy for r in group])
        rounds = np.array([r.rounds for r in group], dtype=float)
        wall = np.array([r.wall_time_seconds for r in group])
        rows.append({
            "method": method, "value": value, "runs": len(group),
            "mean_accuracy": acc.mean(), "std_accuracy": acc.std(),
            "mean_rounds": rounds.mean(), "std_rounds": rounds.std(),
            "mean_wall_time_seconds": wall.mean(), "std_wall_time_seconds": wall.std(),
        })
    return rows


def aggregate_csv(reports) -> str:
    rows = aggregate(reports)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]) if rows else ["method", "value"], lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def _sortable(v):
    return (0, float(v)) if v is not None else (-1, 0.0)


def render_report(reports: list[RunReport], format="csv") -> str:
    """Tabulate reports, rows sorted by (method, value, seed).

    ``markdown`` renders one table per swept variable.
    """
    if not reports:
        raise ValueError("no reports to render")
    if format not in ("csv", "markdown"):
        raise ValueError(f"unknown format {format!r}")
    ordered = sorted(reports, key=lambda r: (r.method, _sortable(r.value), r.seed))

    def row(r):
        return [r.method, "" if r.value is None else repr(r.value), repr(float(r.mean_accuracy)),
                str(r.rounds), repr(float(r.wall_time_seconds)), str(r.seed)]

    if format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(REPORT_COLUMNS)
        writer.writerows(row(r) for r in ordered)
        return buf.getvalue()

    out = []
    for variable in sorted({r.variable or "" for r in ordered}):
        out.append(f"### {variable or 'single runs'}\n")
        out.append("| " + " | ".join(REPORT_COLUMNS) + " |")
        out.append("|" + "---|" * len(REPORT_COLUMNS))
        for r in ordered:
            if (r.variable or "") == variable:
                out.append("| " + " | ".join(row(r)) + " |")
        out.append("")
    return "\n".join(out)
