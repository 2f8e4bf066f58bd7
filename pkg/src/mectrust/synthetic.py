"""Synthetic surrogates for the IoT trust datasets.

``make_devices`` produces raw per-device tables (numeric columns on mixed
scales plus a categorical protocol column) whose benign/harmful boundary
differs from device to device. They go through the same curation pipeline as
real CSV data. ``separable_manifest`` skips the pipeline and builds small
per-node datasets directly, for solver-level checks.
"""

from __future__ import annotations

import dataclasses
import json
from pathlib import Path

import numpy as np
import pandas as pd

from .dataprep import NodeDataset, PartitionManifest, Schema, Table, build_partition
from .topology import MecTopology, generate_topology

PROTOCOLS = ("tcp", "udp", "icmp", "arp", "igmp")
ATTACKS = ("mirai_udp", "mirai_syn", "gafgyt_tcp", "gafgyt_scan")

# desk-scale analogues of the real split ranges
DESK_KNOWN_RANGE = (15, 60)
DESK_LESSER_RANGE = (5, 15)


def make_devices(n_devices=4, rows_per_device=2000, n_numeric=30, device_shift=1.0,
                 separation=1.0, label_noise=0.05, seed=0) -> dict[str, Table]:
    """Raw device tables with device-specific linear labelling rules.

    Every device labels by ``sign(w_k . x + noise)`` with
    ``w_k = w_shared + device_shift * delta_k``; ``separation`` scales the
    class margin and ``label_noise`` is the fraction of flipped labels.
    """
    rng = np.random.default_rng(seed)
    shared = rng.normal(size=n_numeric)
    shared /= np.linalg.norm(shared)
    magnitudes = 10.0 ** rng.uniform(0, 4, size=n_numeric)
    devices = {}
    for k in range(n_devices):
        delta = rng.normal(size=n_numeric)
        delta /= np.linalg.norm(delta)
        w = shared + device_shift * delta
        w /= np.linalg.norm(w)
        center = rng.normal(scale=0.5, size=n_numeric)
        Z = rng.normal(size=(rows_per_device, n_numeric))
        margin = Z @ w
        y = np.where(margin > 0, 1, -1)
        Z += separation * 0.5 * y[:, None] * w[None, :]
        flip = rng.random(rows_per_device) < label_noise
        y = np.where(flip, -y, y)
        raw = (Z + center) * magnitudes
        frame = pd.DataFrame(raw, columns=[f"f{j:02d}" for j in range(n_numeric)])
        benign_p = np.array([0.45, 0.3, 0.1, 0.1, 0.05])
        harmful_p = np.array([0.3, 0.45, 0.15, 0.05, 0.05])
        proto = np.where(
            y > 0,
            rng.choice(len(PROTOCOLS), size=rows_per_device, p=benign_p),
            rng.choice(len(PROTOCOLS), size=rows_per_device, p=harmful_p),
        )
        frame.insert(n_numeric // 2, "proto", np.array(PROTOCOLS, dtype=object)[proto])
        devices[f"device_{k:02d}"] = Table(frame, y.astype(np.int64), ["proto"])
    return devices


def schema() -> Schema:
    """Schema matching the CSV layout written by :func:`write_csv`."""
    return Schema(columns={"proto": "categorical", "label": "label"},
                  benign=["benign"], harmful=["mirai_*", "gafgyt_*"], name="synthetic")


def write_csv(devices: dict[str, Table], out_dir, seed=0) -> Path:
    """Write one CSV per device with string labels (benign or an attack name)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    for name, table in devices.items():
        frame = table.frame.copy()
        attack = np.array(ATTACKS, dtype=object)[rng.integers(len(ATTACKS), size=len(table))]
        frame["label"] = np.where(table.labels > 0, "benign", attack)
        frame.to_csv(out_dir / f"{name}.csv", index=False)
    sch = schema()
    (out_dir / "schema.json").write_text(json.dumps(dataclasses.asdict(sch), indent=1))
    return out_dir


def desk_partition(n_nodes=15, seed=0, k=4, n_devices=5, rows_per_device=400, n_numeric=50,
                   device_shift=0.7, label_noise=0.05, noise_sigmas=(0.0, 0.02, 0.05, 0.1),
                   known_range=DESK_KNOWN_RANGE, lesser_range=DESK_LESSER_RANGE,
                   lesser_fraction=0.15, tau=0.3, data_seed=None):
    """Desk-scale surrogate experiment: topology plus curated partition.

    ``data_seed`` fixes the device tables independently of the partition seed.
    """
    topo = generate_topology(n_nodes, min(k, max(n_nodes - 1, 1)), seed)
    devices = make_devices(n_devices, rows_per_device, n_numeric, device_shift,
                           label_noise=label_noise, seed=seed if data_seed is None else data_seed)
    manifest = build_partition(
        devices, topo, seed, known_range=known_range, lesser_range=lesser_range,
        lesser_fraction=lesser_fraction, noise_sigmas=noise_sigmas, tau=tau,
        dataset_name="synthetic",
    )
    return topo, manifest


def separable_manifest(topology: MecTopology, n_per_node=40, dim=5, seed=0, margin=0.1,
                       identical=False, n_test=20) -> PartitionManifest:
    """Linearly separable data in [0, 1]^dim around one shared hyperplane.

    With ``identical=True`` every node holds a copy of the same samples.
    """
    rng = np.random.default_rng(seed)
    normal = rng.normal(size=dim)
    normal /= np.linalg.norm(normal)

    def draw(n):
        X = np.empty((0, dim))
        while len(X) < n:
            cand = rng.uniform(size=(4 * n, dim))
            s = (cand - 0.5) @ normal
            X = np.vstack([X, cand[np.abs(s) > margin]])
        X = X[:n]
        return X, np.where((X - 0.5) @ normal > 0, 1, -1).astype(np.int64)

    nodes = []
    shared = draw(n_per_node + n_test)
    for i in range(topology.n_nodes):
        X, y = shared if identical else draw(n_per_node + n_test)
        nodes.append(NodeDataset(i, X[:n_per_node].copy(), y[:n_per_node].copy(),
                                 X[n_per_node:].copy(), y[n_per_node:].copy()))
        topology.nodes[i].sample_count = n_per_node
    return PartitionManifest("separable", dim, nodes, seed=seed)
