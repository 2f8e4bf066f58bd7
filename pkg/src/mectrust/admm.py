"""Graph-regularized distributed SVM training by ADMM with gamma continuation.

Each node ``i`` owns a model ``w_i``; each undirected edge ``(i, j)`` owns a
pair of copies ``(z_ij, z_ji)`` and scaled duals ``(u_ij, u_ji)``. One ADMM
iteration is a round of node-local w-updates (parallel across nodes), then
closed-form edge z-updates, dual updates and residuals. ``bootstrap`` repeats
ADMM while geometrically increasing the fusion strength ``gamma``, warm
starting every stage from the previous one.

Edges are kept in the topology's sorted order with ``a < b``; arrays of edge
quantities have shape ``(n_edges, 2, dim)`` where slot 0 belongs to ``a`` and
slot 1 to ``b``.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .model import SvmParams, augment
from .svm import ConvergenceError, solve_prox_svm

logger = logging.getLogger(__name__)

EDGE_WEIGHTS = ("symmetric", "asymmetric")


@dataclass
class AdmmConfig:
    rho: float = 1.0
    gamma_ini: float = 0.01
    gamma_inc: float = 10.0
    gamma_th: float = 10.0
    max_iters: int = 1000
    # None means 1e-3 * sqrt(directed edge count * model dimension)
    eps_primal: float | None = None
    eps_dual: float | None = None
    svm: SvmParams = field(default_factory=SvmParams)
    w_solver_tol: float = 1e-5
    w_solver_max_iters: int = 100000
    edge_weight: str = "symmetric"
    workers: int = 1

    def __post_init__(self):
        if isinstance(self.svm, dict):
            self.svm = SvmParams(**self.svm)
        elif not isinstance(self.svm, SvmParams):
            self.svm = SvmParams(self.svm)
        checks = {
            "rho": self.rho > 0,
            "gamma_ini": self.gamma_ini > 0,
            "gamma_inc": self.gamma_inc > 1,
            "gamma_th": self.gamma_th > 0 and self.gamma_ini <= self.gamma_th,
            "max_iters": self.max_iters >= 1,
            "eps_primal": self.eps_primal is None or self.eps_primal > 0,
            "eps_dual": self.eps_dual is None or self.eps_dual > 0,
            "w_solver_tol": self.w_solver_tol > 0,
            "w_solver_max_iters": self.w_solver_max_iters >= 1,
            "edge_weight": self.edge_weight in EDGE_WEIGHTS,
            "workers": self.workers >= 1,
        }
        bad = [k for k, ok in checks.items() if not ok]
        if bad:
            raise ValueError(f"invalid ADMM configuration field(s): {', '.join(bad)}")

    def thresholds(self, n_edges: int, dim: int) -> tuple[float, float]:
        scale = 1e-3 * math.sqrt(2 * n_edges * dim)
        return (self.eps_primal if self.eps_primal is not None else scale,
                self.eps_dual if self.eps_dual is not None else scale)

    def gamma_schedule(self) -> list[float]:
        out = []
        s = 0
        while True:
            g = self.gamma_ini * self.gamma_inc**s
            if g > self.gamma_th * (1 + 1e-9):
                return out
            out.append(g)
            s += 1

    def to_dict(self) -> dict:
        doc = dataclasses.asdict(self)
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> AdmmConfig:
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(doc) - names)
        if unknown:
            raise ValueError(f"unknown configuration key(s): {', '.join(unknown)}")
        return cls(**doc)


@dataclass
class IterationTrace:
    stage: int
    iteration: int
    gamma: float
    primal_residual_norm: float
    dual_residual_norm: float
    rounds_so_far: int


@dataclass
class AdmmState:
    W: np.ndarray
    Z: np.ndarray
    U: np.ndarray
    alpha: list[np.ndarray]

    @classmethod
    def zeros(cls, n_nodes, n_edges, dim, train_sizes) -> AdmmState:
        return cls(np.zeros((n_nodes, dim)), np.zeros((n_edges, 2, dim)), np.zeros((n_edges, 2, dim)),
                   [np.zeros(int(n)) for n in train_sizes])

    def copy(self) -> AdmmState:
        return AdmmState(self.W.copy(), self.Z.copy(), self.U.copy(), [a.copy() for a in self.alpha])


@dataclass
class StageResult:
    gamma: float
    iterations: int
    converged: bool
    primal_residual_norm: float
    dual_residual_norm: float


@dataclass
class BootstrapResult:
    W: np.ndarray
    trace: list[IterationTrace]
    stages: list[StageResult]
    state: AdmmState

    @property
    def rounds(self) -> int:
        return self.trace[-1].rounds_so_far if self.trace else 0


# ---------------------------------------------------------------------------
# the three updates


def w_update(X, y, v, rho, C, alpha=None, tol=1e-8, max_iters=10000, seed=0):
    """Minimize ``0.5||w||^2 + C*sum(hinge) + sum_j rho/2 ||w - v_j||^2``.

    ``X`` carries the bias column; ``v`` stacks ``z_ij - u_ij`` for each
    neighbour (shape ``(k, dim)``, possibly ``k = 0``). Returns ``(w, alpha)``
    where ``alpha`` is the dual vector to warm start the next call.
    """
    v = np.asarray(v, dtype=float)
    k = v.shape[0]
    a = 1.0 + rho * k
    center = rho * v.sum(axis=0) / a
    offset = 0.5 * rho * float(np.sum(v * v)) - 0.5 * a * float(center @ center) if k else 0.0
    res = solve_prox_svm(X, y, C, a, center, max(offset, 0.0), alpha, tol, max_iters, seed)
    return res.w, res.alpha


def z_update(a, b, lam, rho):
    """Closed-form edge fusion step.

    Minimizes ``lam*||z_ij - z_ji|| + rho/2 (||a - z_ij||^2 + ||b - z_ji||^2)``
    with ``a = w_i + u_ij`` and ``b = w_j + u_ji``. Works on single vectors or
    on stacks of edges (leading axis) with per-edge ``lam``.
    """
    if not rho > 0:
        raise ValueError("rho must be positive")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    diff = np.linalg.norm(a - b, axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        theta = np.maximum(1.0 - np.asarray(lam, dtype=float) / (rho * diff), 0.5)
    theta = np.where(diff > 0, theta, 1.0)[..., None]
    return theta * a + (1.0 - theta) * b, (1.0 - theta) * a + theta * b


def u_update(u, w, z):
    return u + (w - z)


def residuals(W, Z, Z_prev, rho, edge_a, edge_b) -> tuple[float, float]:
    """Primal ``sqrt(sum ||w_i - z_ij||^2)`` and dual ``rho*sqrt(sum ||dz||^2)`` over directed edges."""
    if len(edge_a) == 0:
        return 0.0, 0.0
    r = np.stack([W[edge_a] - Z[:, 0], W[edge_b] - Z[:, 1]], axis=1)
    dz = Z - Z_prev
    return float(math.sqrt(np.sum(r * r))), float(rho * math.sqrt(np.sum(dz * dz)))


def edge_weights(gamma, n_a, n_b, dist, mode="symmetric"):
    """Fusion weight per edge: ``gamma*(n_a+n_b)/(2d)`` or ``gamma*n_b/d``."""
    if mode == "symmetric":
        return gamma * (n_a + n_b) / (2.0 * dist)
    if mode == "asymmetric":
        return gamma * n_b / dist
    raise ValueError(f"unknown edge weight mode {mode!r}")


# ---------------------------------------------------------------------------
# drivers


class _Problem:
    """Per-run constants: augmented node data, incidence lists, edge arrays."""

    def __init__(self, topology, manifest, config: AdmmConfig):
        if topology.n_nodes != len(manifest.nodes):
            raise ValueError(f"topology has {topology.n_nodes} nodes but manifest has {len(manifest.nodes)}")
        self.config = config
        self.dim = manifest.feature_dim + 1
        self.X = [np.ascontiguousarray(augment(n.X_train).reshape(n.n_train, self.dim)) for n in manifest.nodes]
        self.y = [n.y_train.astype(float) for n in manifest.nodes]
        self.n = manifest.train_sizes.astype(float)
        self.C = [config.svm.cost(len(y)) for y in self.y]
        self.edge_a, self.edge_b, self.dist = topology.edge_arrays()
        self.incident = [[] for _ in range(topology.n_nodes)]
        for e, (i, j) in enumerate(zip(self.edge_a.tolist(), self.edge_b.tolist())):
            self.incident[i].append((e, 0))
            self.incident[j].append((e, 1))
        self.eps_primal, self.eps_dual = config.thresholds(len(self.edge_a), self.dim)

    @property
    def n_nodes(self):
        return len(self.X)

    @property
    def n_edges(self):
        return len(self.edge_a)

    def zeros(self) -> AdmmState:
        return AdmmState.zeros(self.n_nodes, self.n_edges, self.dim, [len(y) for y in self.y])


def _node_step(problem: _Problem, state: AdmmState, i: int, iteration: int):
    cfg = problem.config
    inc = problem.incident[i]
    if inc:
        e, side = zip(*inc)
        v = state.Z[list(e), list(side)] - state.U[list(e), list(side)]
    else:
        v = np.zeros((0, problem.dim))
    try:
        return w_update(problem.X[i], problem.y[i], v, cfg.rho, problem.C[i], state.alpha[i],
                        cfg.w_solver_tol, cfg.w_solver_max_iters, seed=i)
    except ConvergenceError as exc:
        exc.node, exc.iteration = i, iteration
        exc.args = (f"node {i}, iteration {iteration}: {exc.args[0]}",)
        raise


def run_admm(topology, manifest, config: AdmmConfig, gamma: float, state: AdmmState | None = None,
             rounds_offset: int = 0, stage: int = 0, _problem: _Problem | None = None):
    """Iterate ADMM at a fixed ``gamma`` until both residuals drop below threshold.

    Stops after ``config.max_iters`` iterations otherwise (recorded, not an
    error). Returns ``(state, trace, converged)``; ``state`` is updated in place
    when given.
    """
    problem = _problem or _Problem(topology, manifest, config)
    state = state or problem.zeros()
    lam = edge_weights(gamma, problem.n[problem.edge_a], problem.n[problem.edge_b], problem.dist,
                       config.edge_weight)
    trace = []
    converged = False
    pool = ThreadPoolExecutor(config.workers) if config.workers > 1 else None
    try:
        for it in range(1, config.max_iters + 1):
            if pool is None:
                results = [_node_step(problem, state, i, it) for i in range(problem.n_nodes)]
            else:
                results = list(pool.map(lambda i: _node_step(problem, state, i, it), range(problem.n_nodes)))
            for i, (w, alpha) in enumerate(results):
                state.W[i] = w
                state.alpha[i] = alpha

            if problem.n_edges:
                Z_prev = state.Z.copy()
                A = state.W[problem.edge_a] + state.U[:, 0]
                B = state.W[problem.edge_b] + state.U[:, 1]
                state.Z[:, 0], state.Z[:, 1] = z_update(A, B, lam, config.rho)
                state.U[:, 0] = u_update(state.U[:, 0], state.W[problem.edge_a], state.Z[:, 0])
                state.U[:, 1] = u_update(state.U[:, 1], state.W[problem.edge_b], state.Z[:, 1])
                primal, dual = residuals(state.W, state.Z, Z_prev, config.rho, problem.edge_a, problem.edge_b)
            else:
                primal = dual = 0.0

            trace.append(IterationTrace(stage, it, gamma, primal, dual, rounds_offset + it))
            if problem.n_edges == 0 or (primal < problem.eps_primal and dual < problem.eps_dual):
                converged = True
                break
    finally:
        if pool is not None:
            pool.shutdown()
    if not converged:
        logger.info("gamma=%g stopped at max_iters=%d (primal %.3g, dual %.3g)",
                    gamma, config.max_iters, trace[-1].primal_residual_norm, trace[-1].dual_residual_norm)
    return state, trace, converged


def bootstrap(topology, manifest, config: AdmmConfig, trace_path=None, on_stage=None) -> BootstrapResult:
    """Run ADMM over the gamma schedule ``gamma_ini * gamma_inc**s <= gamma_th``.

    ``on_stage(gamma, W)`` is called after each stage. With ``trace_path`` the
    iteration trace is streamed as JSON lines.
    """
    problem = _Problem(topology, manifest, config)
    state = problem.zeros()
    trace: list[IterationTrace] = []
    stages = []
    sink = open(trace_path, "w") if trace_path else None
    try:
        for s, gamma in enumerate(config.gamma_schedule()):
            state, stage_trace, converged = run_admm(
                topology, manifest, config, gamma, state, trace[-1].rounds_so_far if trace else 0, s, problem
            )
            trace.extend(stage_trace)
            last = stage_trace[-1]
            stages.append(StageResult(gamma, len(stage_trace), converged,
                                      last.primal_residual_norm, last.dual_residual_norm))
            if sink:
                for t in stage_trace:
                    sink.write(json.dumps(dataclasses.asdict(t)) + "\n")
                sink.flush()
            if on_stage is not None:
                on_stage(gamma, state.W.copy())
    finally:
        if sink:
            sink.close()
    return BootstrapResult(state.W.copy(), trace, stages, state)
