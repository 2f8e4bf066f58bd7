"""MEC topology graphs: nodes in the unit square linked to their nearest neighbours."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.sparse.csgraph import minimum_spanning_tree
from scipy.spatial.distance import cdist


@dataclass
class MecNode:
    id: int
    position: tuple[float, float]
    sample_count: int = 0


@dataclass(frozen=True)
class MecEdge:
    a: int
    b: int
    distance: float


@dataclass
class MecTopology:
    nodes: list[MecNode]
    edges: list[MecEdge] = field(default_factory=list)

    def __post_init__(self):
        self.edges = sorted(self.edges, key=lambda e: (min(e.a, e.b), max(e.a, e.b)))
        self._adj = None

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def positions(self) -> np.ndarray:
        return np.array([n.position for n in self.nodes], dtype=float).reshape(-1, 2)

    def edge_arrays(self):
        """Return ``(a, b, d)`` arrays in stored edge order, with ``a < b``."""
        a = np.array([min(e.a, e.b) for e in self.edges], dtype=np.int64)
        b = np.array([max(e.a, e.b) for e in self.edges], dtype=np.int64)
        d = np.array([e.distance for e in self.edges], dtype=float)
        return a, b, d

    def neighbors(self, i: int) -> list[tuple[int, float]]:
        return neighbors(self, i)

    def validate(self) -> None:
        """Raise ``ValueError`` if any structural invariant is broken."""
        ids = [n.id for n in self.nodes]
        if ids != list(range(len(ids))):
            raise ValueError("node ids must be contiguous from 0 in order")
        seen = set()
        pos = self.positions
        for e in self.edges:
            if e.a == e.b:
                raise ValueError(f"self loop on node {e.a}")
            if not (0 <= e.a < len(ids) and 0 <= e.b < len(ids)):
                raise ValueError(f"edge ({e.a}, {e.b}) references unknown node")
            key = (min(e.a, e.b), max(e.a, e.b))
            if key in seen:
                raise ValueError(f"duplicate edge {key}")
            seen.add(key)
            if not e.distance > 0:
                raise ValueError(f"edge {key} has non-positive distance")
            if abs(e.distance - float(np.linalg.norm(pos[e.a] - pos[e.b]))) > 1e-12:
                raise ValueError(f"edge {key} distance does not match node positions")
        if ids and not is_connected(self):
            raise ValueError("topology is not connected")

    def to_dict(self) -> dict:
        return {
            "nodes": [{"id": n.id, "x": n.position[0], "y": n.position[1]} for n in self.nodes],
            "edges": [{"a": e.a, "b": e.b, "d": e.distance} for e in self.edges],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> MecTopology:
        nodes = [MecNode(int(n["id"]), (float(n["x"]), float(n["y"]))) for n in doc["nodes"]]
        edges = [MecEdge(int(e["a"]), int(e["b"]), float(e["d"])) for e in doc["edges"]]
        topo = cls(nodes, edges)
        topo.validate()
        return topo

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    def save(self, path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def load(cls, path) -> MecTopology:
        return cls.from_dict(json.loads(Path(path).read_text()))


def from_positions(positions, pairs) -> MecTopology:
    """Build a topology from explicit coordinates and an iterable of node pairs."""
    positions = np.asarray(positions, dtype=float).reshape(-1, 2)
    nodes = [MecNode(i, (float(x), float(y))) for i, (x, y) in enumerate(positions)]
    edges = []
    for a, b in {(min(p), max(p)) for p in pairs}:
        edges.append(MecEdge(int(a), int(b), float(np.linalg.norm(positions[a] - positions[b]))))
    topo = MecTopology(nodes, edges)
    topo.validate()
    return topo


def generate_topology(m: int, k: int = 4, seed: int = 0) -> MecTopology:
    """Place ``m`` nodes uniformly in the unit square and link each to its ``k`` nearest.

    The k-NN relation is symmetrized; if the result is disconnected the edges of
    a Euclidean minimum spanning tree are added.
    """
    if m < 1:
        raise ValueError(f"node count must be >= 1, got {m}")
    if k < 1:
        raise ValueError(f"neighbour degree must be >= 1, got {k}")
    positions = np.random.default_rng(seed).uniform(0.0, 1.0, size=(m, 2))
    if m == 1:
        return from_positions(positions, [])
    if k >= m:
        raise ValueError(f"neighbour degree k={k} must be smaller than node count m={m}")
    return knn_topology(positions, k)


def knn_topology(positions, k: int) -> MecTopology:
    """Symmetrized k-nearest-neighbour graph over fixed positions, MST-repaired if disconnected."""
    positions = np.asarray(positions, dtype=float).reshape(-1, 2)
    m = len(positions)
    dist = cdist(positions, positions)
    pairs = set()
    for i in range(m):
        # stable sort keeps the lower id first on ties
        order = np.argsort(dist[i], kind="stable")
        order = order[order != i][:k]
        pairs.update((min(i, j), max(i, j)) for j in order.tolist())
    if not _connected(m, pairs):
        mst = minimum_spanning_tree(dist).tocoo()
        pairs.update((min(i, j), max(i, j)) for i, j in zip(mst.row.tolist(), mst.col.tolist()))
    return from_positions(positions, pairs)


def neighbors(t: MecTopology, i: int) -> list[tuple[int, float]]:
    """Adjacent node ids of ``i`` with edge distances, ascending by id."""
    if not 0 <= i < t.n_nodes:
        raise ValueError(f"invalid node id {i}")
    if t._adj is None:
        adj: dict[int, list[tuple[int, float]]] = {n.id: [] for n in t.nodes}
        for e in t.edges:
            adj[e.a].append((e.b, e.distance))
            adj[e.b].append((e.a, e.distance))
        t._adj = {n: sorted(v) for n, v in adj.items()}
    return list(t._adj[i])


def is_connected(t: MecTopology) -> bool:
    return _connected(t.n_nodes, [(e.a, e.b) for e in t.edges])


def _connected(m, pairs) -> bool:
    adj = [[] for _ in range(m)]
    for a, b in pairs:
        adj[a].append(b)
        adj[b].append(a)
    seen = {0}
    stack = [0]
    while stack:
        for j in adj[stack.pop()]:
            if j not in seen:
                seen.add(j)
                stack.append(j)
    return len(seen) == m
