from collections import deque

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mectrust.topology import MecTopology, from_positions, generate_topology, knn_topology, neighbors


def bfs_reachable(topo):
    adj = {n.id: set() for n in topo.nodes}
    for e in topo.edges:
        adj[e.a].add(e.b)
        adj[e.b].add(e.a)
    seen, queue = {0}, deque([0])
    while queue:
        for j in adj[queue.popleft()] - seen:
            seen.add(j)
            queue.append(j)
    return seen


def test_single_node_has_no_edges():
    topo = generate_topology(1, 1, seed=7)
    assert topo.n_nodes == 1
    assert topo.edges == []
    assert neighbors(topo, 0) == []


def test_three_four_five_distance():
    topo = from_positions([(0, 0), (3, 4)], [(0, 1)])
    assert topo.edges[0].distance == 5.0


def test_small_graph_connected_with_tree_bound():
    topo = generate_topology(5, 2, seed=42)
    assert len(topo.edges) >= 4
    assert bfs_reachable(topo) == set(range(5))
    assert len(neighbors(topo, 0)) >= 2


def test_neighbors_path_graph():
    topo = from_positions([(0, 0), (1, 0), (3, 0)], [(1, 0), (1, 2)])
    assert neighbors(topo, 1) == [(0, 1.0), (2, 2.0)]


def test_neighbors_invalid_id():
    topo = generate_topology(3, 1, seed=0)
    with pytest.raises(ValueError):
        neighbors(topo, 3)
    with pytest.raises(ValueError):
        neighbors(topo, -1)


@pytest.mark.parametrize("m, k", [(0, 1), (3, 3), (3, 5), (4, 0)])
def test_invalid_arguments(m, k):
    with pytest.raises(ValueError):
        generate_topology(m, k, seed=0)


def test_edges_sorted_and_unique():
    topo = generate_topology(30, 3, seed=1)
    keys = [(e.a, e.b) for e in topo.edges]
    assert all(a < b for a, b in keys)
    assert keys == sorted(set(keys))


def test_mst_repair_reconnects_clusters():
    # two far-apart clusters: 2-NN stays inside each cluster, the MST must bridge them
    pos = [(0, 0), (0.01, 0), (0, 0.01), (1, 1), (1.01, 1), (1, 1.01)]
    topo = knn_topology(pos, 2)
    assert bfs_reachable(topo) == set(range(6))
    assert any(e.a < 3 <= e.b for e in topo.edges)


def test_knn_tie_break_prefers_lower_id():
    # node 0 is equidistant from 1 and 2; with k=1 it links to 1
    pos = [(0.5, 0.5), (0.5, 0.6), (0.5, 0.4), (0.9, 0.9)]
    topo = knn_topology(pos, 1)
    pairs = {(e.a, e.b) for e in topo.edges}
    assert (0, 1) in pairs


@settings(max_examples=40, deadline=None)
@given(m=st.integers(2, 40), k=st.integers(1, 6), seed=st.integers(0, 2**31))
def test_generated_topology_invariants(m, k, seed):
    k = min(k, m - 1)
    topo = generate_topology(m, k, seed)
    topo.validate()
    assert bfs_reachable(topo) == set(range(m))
    pos = topo.positions
    assert np.all((pos >= 0) & (pos <= 1))
    for e in topo.edges:
        assert e.distance > 0
        assert abs(e.distance - np.hypot(*(pos[e.a] - pos[e.b]))) <= 1e-12
    for i in range(m):
        assert len(neighbors(topo, i)) >= k
        # symmetry
        for j, d in neighbors(topo, i):
            assert (i, d) in neighbors(topo, j)


def test_same_seed_byte_identical(tmp_path):
    a = generate_topology(25, 4, seed=11)
    b = generate_topology(25, 4, seed=11)
    a.save(tmp_path / "a.json")
    b.save(tmp_path / "b.json")
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    assert generate_topology(25, 4, seed=12).dumps() != a.dumps()


def test_json_round_trip(tmp_path):
    topo = generate_topology(12, 3, seed=5)
    topo.save(tmp_path / "t.json")
    back = MecTopology.load(tmp_path / "t.json")
    assert back.dumps() == topo.dumps()
    doc = topo.to_dict()
    assert set(doc) == {"nodes", "edges"}
    assert set(doc["nodes"][0]) == {"id", "x", "y"}
    assert set(doc["edges"][0]) == {"a", "b", "d"}


def test_validate_rejects_disconnected():
    with pytest.raises(ValueError, match="connected"):
        from_positions([(0, 0), (1, 0), (2, 0)], [(0, 1)])
