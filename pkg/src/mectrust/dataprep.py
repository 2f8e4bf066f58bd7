"""Curate raw IoT security tables into per-node trust datasets.

Pipeline, per dataset:

1. ``load_csv`` each file into a :class:`Table` (typed cells, labels as +1/-1).
2. ``split_into_services`` slices every device's rows into service-sized splits.
3. ``assign_communities`` groups splits into homogeneous communities.
4. ``assign_to_nodes`` places splits on topology nodes and cuts train/test.
5. ``one_hot_encode`` / ``min_max_scale`` are fit on pooled training rows only
   and applied everywhere.
6. ``apply_community_noise`` perturbs each split with its community's sigma.

``build_partition`` runs steps 2-6 and returns a :class:`PartitionManifest`.
"""

from __future__ import annotations

import fnmatch
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from .topology import MecTopology

KNOWN = "known"
LESSER_KNOWN = "lesser_known"

DEFAULT_NOISE_SIGMAS = (0.0, 0.02, 0.05, 0.1)

ROLES = ("numeric", "categorical", "label", "drop")


class ParseError(ValueError):
    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class LabelError(ValueError):
    pass


# ---------------------------------------------------------------------------
# schema and loading


@dataclass
class Schema:
    """Column roles and label mapping for one dataset.

    ``columns`` maps column name to a role in :data:`ROLES`; columns not listed
    take ``default_role``. Label values are matched against ``benign`` and
    ``harmful`` glob patterns (case-sensitive). With ``label_source="filename"``
    the file stem is matched instead of a column (N-BaIoT style layout).
    """

    columns: dict[str, str] = field(default_factory=dict)
    benign: list[str] = field(default_factory=list)
    harmful: list[str] = field(default_factory=list)
    default_role: str = "numeric"
    label_source: str = "column"
    device_column: str | None = None
    missing_value: float = 0.0
    name: str = "dataset"

    def __post_init__(self):
        for col, role in self.columns.items():
            if role not in ROLES:
                raise ValueError(f"column {col!r} has unknown role {role!r}")
        if self.default_role not in ROLES:
            raise ValueError(f"unknown default role {self.default_role!r}")
        if self.label_source not in ("column", "filename"):
            raise ValueError(f"label_source must be 'column' or 'filename'")

    def role(self, column: str) -> str:
        return self.columns.get(column, self.default_role)

    def map_label(self, value: str) -> int:
        value = str(value).strip()
        if any(fnmatch.fnmatchcase(value, p) for p in self.benign):
            return 1
        if any(fnmatch.fnmatchcase(value, p) for p in self.harmful):
            return -1
        raise LabelError(f"label value {value!r} matches neither benign nor harmful patterns")

    @classmethod
    def from_dict(cls, doc: dict) -> Schema:
        return cls(**doc)

    @classmethod
    def load(cls, path) -> Schema:
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass
class Table:
    """Typed rows of one source: numeric columns are float, categorical are str."""

    frame: pd.DataFrame
    labels: np.ndarray
    categorical: list[str]
    devices: np.ndarray | None = None

    def __len__(self):
        return len(self.labels)

    @property
    def numeric(self) -> list[str]:
        return [c for c in self.frame.columns if c not in self.categorical]


def _parse_number(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        return float(int(text, 0))


def load_csv(path, schema: Schema) -> Table:
    """Read a headed CSV file into a :class:`Table` following ``schema``.

    Blank numeric cells take ``schema.missing_value``; any other unparseable
    numeric cell raises :class:`ParseError` naming the (1-based data) row and
    column.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such data file: {path}")
    raw = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    raw.columns = [c.strip() for c in raw.columns]

    if schema.label_source == "filename":
        labels = np.full(len(raw), schema.map_label(path.stem), dtype=np.int64)
    else:
        label_cols = [c for c in raw.columns if schema.role(c) == "label"]
        if len(label_cols) != 1:
            raise ValueError(f"schema must mark exactly one label column, found {label_cols}")
        mapping = {v: schema.map_label(v) for v in pd.unique(raw[label_cols[0]])}
        labels = raw[label_cols[0]].map(mapping).to_numpy(dtype=np.int64)

    devices = None
    if schema.device_column is not None:
        devices = raw[schema.device_column].str.strip().to_numpy(dtype=object)

    out = {}
    categorical = []
    for col in raw.columns:
        role = schema.role(col)
        if role in ("label", "drop") or col == schema.device_column:
            continue
        cells = raw[col].str.strip()
        if role == "categorical":
            out[col] = cells.to_numpy(dtype=object)
            categorical.append(col)
            continue
        try:
            out[col] = pd.to_numeric(cells.replace("", np.nan)).fillna(schema.missing_value).to_numpy(float)
        except (ValueError, TypeError):
            values = np.empty(len(cells))
            for r, text in enumerate(cells):
                if text == "":
                    values[r] = schema.missing_value
                    continue
                try:
                    values[r] = _parse_number(text)
                except ValueError:
                    raise ParseError(
                        f"{path.name}: cannot parse {text!r} as a number at row {r + 1}, column {col!r}",
                        row=r + 1,
                        column=col,
                    ) from None
            out[col] = values
        if not np.all(np.isfinite(out[col])):
            raise ParseError(f"{path.name}: non-finite value in column {col!r}", column=col)
    return Table(pd.DataFrame(out, index=pd.RangeIndex(len(raw))), labels, categorical, devices)


def load_directory(data_dir, schema: Schema) -> dict[str, Table]:
    """Load every device under ``data_dir``.

    Each sub-directory is one device (all its CSVs concatenated, in sorted
    order); loose CSVs in ``data_dir`` are devices of their own. When the schema
    names a ``device_column``, rows are regrouped by that column instead.
    """
    data_dir = Path(data_dir)
    if not data_dir.is_dir():
        raise FileNotFoundError(f"no such data directory: {data_dir}")
    groups: dict[str, list[Path]] = {}
    for sub in sorted(p for p in data_dir.iterdir() if p.is_dir()):
        files = sorted(sub.rglob("*.csv"))
        if files:
            groups[sub.name] = files
    for f in sorted(data_dir.glob("*.csv")):
        groups[f.stem] = [f]
    if not groups:
        raise FileNotFoundError(f"no CSV files under {data_dir}")

    devices = {name: concat_tables([load_csv(f, schema) for f in files]) for name, files in groups.items()}
    if schema.device_column is None:
        return devices
    pooled = concat_tables(list(devices.values()))
    out = {}
    for dev in sorted(set(pooled.devices.tolist())):
        mask = pooled.devices == dev
        out[str(dev)] = Table(
            pooled.frame[mask].reset_index(drop=True), pooled.labels[mask], pooled.categorical, pooled.devices[mask]
        )
    return out


def concat_tables(tables: list[Table]) -> Table:
    if len(tables) == 1:
        return tables[0]
    frame = pd.concat([t.frame for t in tables], ignore_index=True)
    for col in tables[0].categorical:
        frame[col] = frame[col].astype(object)
    devices = None
    if all(t.devices is not None for t in tables):
        devices = np.concatenate([t.devices for t in tables])
    return Table(frame, np.concatenate([t.labels for t in tables]), tables[0].categorical, devices)


# ---------------------------------------------------------------------------
# encoding and scaling


def one_hot_encode(frame: pd.DataFrame, fit: bool, encoding_map: dict | None = None,
                   columns: list[str] | None = None):
    """Expand categorical columns into 0/1 indicator blocks.

    When fitting, ``columns`` (default: all object-dtype columns) are encoded
    with categories in first-appearance order. At apply time unseen values
    encode as an all-zero block. Each block replaces its source column in place.

    Returns ``(encoded_frame, encoding_map)``.
    """
    if fit:
        if columns is None:
            columns = [c for c in frame.columns if frame[c].dtype == object]
        encoding_map = {c: [str(v) for v in pd.unique(frame[c].astype(str))] for c in columns}
    elif not encoding_map:
        raise ValueError("applying one-hot encoding requires a fitted encoding map")

    blocks, names = [], []
    for col in frame.columns:
        if col not in encoding_map:
            blocks.append(frame[col].to_numpy(dtype=float)[:, None])
            names.append(col)
            continue
        cats = encoding_map[col]
        codes = pd.Categorical(frame[col].astype(str), categories=cats).codes
        block = np.zeros((len(frame), len(cats)))
        hit = codes >= 0
        block[np.flatnonzero(hit), codes[hit]] = 1.0
        blocks.append(block)
        names.extend(f"{col}={c}" for c in cats)
    values = np.hstack(blocks) if blocks else np.zeros((len(frame), 0))
    return pd.DataFrame(values, columns=names, index=frame.index), encoding_map


def min_max_scale(frame: pd.DataFrame, fit: bool, scaling_params: dict | None = None):
    """Map each column affinely onto [0, 1] by its fitted (min, max).

    Constant columns map to 0; apply-time values are clipped into [0, 1].
    Returns ``(scaled_frame, scaling_params)``.
    """
    if fit:
        scaling_params = {c: (float(frame[c].min()), float(frame[c].max())) for c in frame.columns}
    elif scaling_params is None:
        raise ValueError("applying min-max scaling requires fitted parameters")
    values = frame.to_numpy(dtype=float)
    lo = np.array([scaling_params[c][0] for c in frame.columns], dtype=float)
    hi = np.array([scaling_params[c][1] for c in frame.columns], dtype=float)
    if np.any(hi < lo):
        bad = [c for c in frame.columns if scaling_params[c][1] < scaling_params[c][0]]
        raise ValueError(f"scaling parameters with max < min for columns {bad}")
    span = hi - lo
    safe = np.where(span > 0, span, 1.0)
    scaled = np.where(span > 0, (values - lo) / safe, 0.0)
    scaled = np.clip(scaled, 0.0, 1.0)
    return pd.DataFrame(scaled, columns=frame.columns, index=frame.index), scaling_params


# ---------------------------------------------------------------------------
# services, communities, nodes


@dataclass
class ServiceSplit:
    service_id: int
    kind: str
    community_id: int
    rows: np.ndarray
    device: str = ""
    X: np.ndarray | None = None
    y: np.ndarray | None = None

    def __len__(self):
        return len(self.rows)


def split_into_services(device_rows, known_range=(1000, 20000), lesser_range=(100, 500),
                        lesser_fraction=0.15, seed=0, sizes=None, device="",
                        first_service_id=0) -> list[ServiceSplit]:
    """Cut one device's rows into randomly sized service splits.

    ``device_rows`` is either a row count or a sequence of rows; splits hold
    indices into it. Rows are permuted, then consumed in order: each split is
    lesser-known with probability ``lesser_fraction`` (size drawn from
    ``lesser_range``), otherwise known (size from ``known_range``). A draw that
    overruns the remaining rows is shortened to fit its range; the leftover
    below ``lesser_range[0]`` is discarded.

    ``sizes`` forces a list of ``(size, kind)`` draws; rows left over after the
    forced draws are discarded.
    """
    n = device_rows if isinstance(device_rows, (int, np.integer)) else len(device_rows)
    (k_lo, k_hi), (l_lo, l_hi) = known_range, lesser_range
    if not (0 < l_lo <= l_hi and 0 < k_lo <= k_hi):
        raise ValueError("size ranges must be positive and ordered")
    if not 0.0 <= lesser_fraction <= 1.0:
        raise ValueError("lesser_fraction must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    if n < l_lo:
        return []
    perm = rng.permutation(n)
    splits = []
    pos = 0

    def emit(size, kind):
        nonlocal pos
        splits.append(ServiceSplit(first_service_id + len(splits), kind, -1, perm[pos:pos + size], device))
        pos += size

    if sizes is not None:
        for size, kind in sizes:
            if pos + size > n:
                break
            emit(int(size), kind)
        return splits

    while n - pos >= l_lo:
        remaining = n - pos
        if rng.random() < lesser_fraction:
            kind, size = LESSER_KNOWN, int(rng.integers(l_lo, l_hi + 1))
        else:
            kind, size = KNOWN, int(rng.integers(k_lo, k_hi + 1))
        if size > remaining:
            if remaining >= k_lo:
                kind, size = KNOWN, remaining
            else:
                kind, size = LESSER_KNOWN, min(remaining, l_hi)
        emit(size, kind)
    return splits


def assign_communities(splits: list[ServiceSplit], n_communities: int | None = None,
                       by: str = "device", seed: int = 0) -> list[ServiceSplit]:
    """Give every split a community id.

    ``by="device"`` puts all splits of a device in one community (devices
    taken in sorted order, folded modulo ``n_communities`` when given);
    ``by="random"`` draws each split's community uniformly.
    """
    if by == "device":
        names = sorted({s.device for s in splits})
        index = {d: i for i, d in enumerate(names)}
        for s in splits:
            s.community_id = index[s.device] % n_communities if n_communities else index[s.device]
    elif by == "random":
        if not n_communities:
            raise ValueError("random community assignment needs n_communities")
        rng = np.random.default_rng(seed)
        for s in splits:
            s.community_id = int(rng.integers(n_communities))
    else:
        raise ValueError(f"unknown community scheme {by!r}")
    return splits


def apply_community_noise(splits: list[ServiceSplit], noise_sigma_per_community, seed=0):
    """Add zero-mean Gaussian noise with the community's sigma, clipped to [0, 1].

    Each split draws from its own generator keyed by ``(seed, service_id)``, so
    the result does not depend on split order. Splits need scaled ``X``.
    """
    sigmas = [float(s) for s in noise_sigma_per_community]
    if any(s < 0 for s in sigmas):
        raise ValueError("noise sigma must be non-negative")
    for s in splits:
        sigma = sigmas[s.community_id % len(sigmas)]
        if sigma == 0.0 or len(s) == 0:
            continue
        rng = np.random.default_rng([seed, s.service_id])
        s.X = np.clip(s.X + rng.normal(0.0, sigma, size=s.X.shape), 0.0, 1.0)
    return splits


def stratified_holdout(y, test_fraction=0.2, seed=0):
    """Return ``(train_idx, test_idx)`` with per-label shares kept when both labels occur."""
    y = np.asarray(y)
    n = len(y)
    rng = np.random.default_rng(seed)
    n_test = int(round(test_fraction * n))
    classes = np.unique(y)
    if len(classes) < 2:
        perm = rng.permutation(n)
        return np.sort(perm[n_test:]), np.sort(perm[:n_test])
    members = [rng.permutation(np.flatnonzero(y == c)) for c in classes]
    exact = np.array([test_fraction * len(m) for m in members])
    take = np.floor(exact).astype(int)
    # largest remainder so the per-class counts add up to n_test
    for j in np.argsort(-(exact - take), kind="stable")[: n_test - take.sum()]:
        take[j] += 1
    test = np.concatenate([m[:t] for m, t in zip(members, take)])
    train = np.concatenate([m[t:] for m, t in zip(members, take)])
    return np.sort(train), np.sort(test)


@dataclass
class NodeAssignment:
    node_id: int
    services: list[int] = field(default_factory=list)
    # (service_id, positions within the split)
    train: list[tuple[int, np.ndarray]] = field(default_factory=list)
    test: list[tuple[int, np.ndarray]] = field(default_factory=list)


def assign_to_nodes(splits: list[ServiceSplit], topology: MecTopology, seed=0, tau=0.3,
                    test_fraction=0.2) -> list[NodeAssignment]:
    """Place splits on nodes near their community's anchor and cut train/test.

    Each community gets a uniform random anchor in the unit square; a split
    lands on node ``q`` with probability proportional to
    ``exp(-|pos_q - anchor|^2 / tau^2)``. Known splits on a node are pooled and
    held out ``test_fraction`` (label-stratified); lesser-known splits are
    test-only. Splits need labels ``y``.
    """
    if not splits:
        raise ValueError("no service splits to assign")
    rng = np.random.default_rng(seed)
    pos = topology.positions
    communities = sorted({s.community_id for s in splits})
    anchors = {c: rng.uniform(0.0, 1.0, size=2) for c in communities}
    probs = {}
    for c, anchor in anchors.items():
        logits = -np.sum((pos - anchor) ** 2, axis=1) / tau**2
        p = np.exp(logits - logits.max())
        probs[c] = p / p.sum()

    nodes = [NodeAssignment(i) for i in range(topology.n_nodes)]
    for s in splits:
        nodes[int(rng.choice(topology.n_nodes, p=probs[s.community_id]))].services.append(s.service_id)

    by_id = {s.service_id: s for s in splits}
    for node in nodes:
        known = [by_id[i] for i in node.services if by_id[i].kind == KNOWN]
        if known:
            y = np.concatenate([s.y for s in known])
            owner = np.concatenate([np.full(len(s), k) for k, s in enumerate(known)])
            offset = np.concatenate([np.arange(len(s)) for s in known])
            tr, te = stratified_holdout(y, test_fraction, seed=[seed, node.node_id])
            for k, s in enumerate(known):
                node.train.append((s.service_id, offset[tr][owner[tr] == k]))
                node.test.append((s.service_id, offset[te][owner[te] == k]))
        for i in node.services:
            if by_id[i].kind == LESSER_KNOWN:
                node.test.append((i, np.arange(len(by_id[i]))))
    return nodes


# ---------------------------------------------------------------------------
# manifest


@dataclass
class NodeDataset:
    node_id: int
    X_train: np.ndarray
    y_train: np.ndarray
    X_test: np.ndarray
    y_test: np.ndarray
    services: list[int] = field(default_factory=list)

    @property
    def n_train(self) -> int:
        return len(self.y_train)

    @property
    def n_test(self) -> int:
        return len(self.y_test)


@dataclass
class PartitionManifest:
    dataset_name: str
    feature_dim: int
    nodes: list[NodeDataset]
    scaling_params: dict = field(default_factory=dict)
    encoding_map: dict = field(default_factory=dict)
    services: list[dict] = field(default_factory=list)
    seed: int = 0

    @property
    def train_sizes(self) -> np.ndarray:
        return np.array([n.n_train for n in self.nodes], dtype=np.int64)

    @property
    def pooled_train_count(self) -> int:
        return int(self.train_sizes.sum())

    def pooled_train(self):
        X = np.vstack([n.X_train for n in self.nodes])
        y = np.concatenate([n.y_train for n in self.nodes])
        return X, y

    def validate(self) -> None:
        for n in self.nodes:
            for X, y in ((n.X_train, n.y_train), (n.X_test, n.y_test)):
                if X.shape != (len(y), self.feature_dim):
                    raise ValueError(f"node {n.node_id}: feature block shape {X.shape} != ({len(y)}, {self.feature_dim})")
                if len(y) and not np.all(np.isin(y, (-1, 1))):
                    raise ValueError(f"node {n.node_id}: labels must be +1/-1")
                if not np.all(np.isfinite(X)):
                    raise ValueError(f"node {n.node_id}: non-finite features")
        if self.scaling_params and len(self.scaling_params) != self.feature_dim:
            raise ValueError("scaling_params must have one entry per feature column")

    def header(self) -> dict:
        return {
            "dataset_name": self.dataset_name,
            "feature_dim": self.feature_dim,
            "seed": self.seed,
            "scaling_params": {c: list(v) for c, v in self.scaling_params.items()},
            "encoding_map": self.encoding_map,
            "services": self.services,
            "node_datasets": [
                {
                    "node_id": n.node_id,
                    "services": n.services,
                    "n_train": n.n_train,
                    "n_test": n.n_test,
                    "train_file": f"node_{n.node_id:04d}_train.f64",
                    "test_file": f"node_{n.node_id:04d}_test.f64",
                }
                for n in self.nodes
            ],
        }

    def dumps(self) -> str:
        return json.dumps(self.header(), indent=1, sort_keys=True)

    def digest(self) -> str:
        """SHA-256 over the header and every sample byte, in node order."""
        h = hashlib.sha256(self.dumps().encode())
        for n in self.nodes:
            for block in (_pack(n.X_train, n.y_train), _pack(n.X_test, n.y_test)):
                h.update(block.tobytes())
        return h.hexdigest()

    def save(self, out_dir) -> Path:
        """Write ``manifest.json`` plus one little-endian float64 file per node split.

        Each sample file row is the feature vector followed by the label.
        """
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "manifest.json").write_text(self.dumps())
        for n, meta in zip(self.nodes, self.header()["node_datasets"]):
            _pack(n.X_train, n.y_train).tofile(out_dir / meta["train_file"])
            _pack(n.X_test, n.y_test).tofile(out_dir / meta["test_file"])
        return out_dir / "manifest.json"

    @classmethod
    def load(cls, out_dir) -> PartitionManifest:
        out_dir = Path(out_dir)
        path = out_dir / "manifest.json" if out_dir.is_dir() else out_dir
        out_dir = path.parent
        doc = json.loads(path.read_text())
        d = int(doc["feature_dim"])
        nodes = []
        for meta in doc["node_datasets"]:
            Xtr, ytr = _unpack(out_dir / meta["train_file"], d, meta["n_train"])
            Xte, yte = _unpack(out_dir / meta["test_file"], d, meta["n_test"])
            nodes.append(NodeDataset(int(meta["node_id"]), Xtr, ytr, Xte, yte, list(meta["services"])))
        manifest = cls(
            doc["dataset_name"], d, nodes,
            {c: tuple(v) for c, v in doc["scaling_params"].items()},
            doc["encoding_map"], doc["services"], int(doc["seed"]),
        )
        manifest.validate()
        return manifest


def _pack(X, y) -> np.ndarray:
    return np.ascontiguousarray(np.column_stack([X, y]).astype("<f8"))


def _unpack(path, d, n):
    data = np.fromfile(path, dtype="<f8")
    if data.size != n * (d + 1):
        raise ValueError(f"{path}: expected {n} rows of {d + 1} float64 values")
    data = data.reshape(n, d + 1)
    return data[:, :d].copy(), data[:, d].astype(np.int64)


def build_partition(devices: dict[str, Table], topology: MecTopology, seed=0, *,
                    known_range=(1000, 20000), lesser_range=(100, 500), lesser_fraction=0.15,
                    n_communities=None, community_by="device", noise_sigmas=DEFAULT_NOISE_SIGMAS,
                    tau=0.3, test_fraction=0.2, dataset_name="dataset") -> PartitionManifest:
    """Run the full curation pipeline and attach training sizes to ``topology``."""
    ss = np.random.SeedSequence(seed)
    names = sorted(devices)
    device_seeds = ss.spawn(len(names) + 3)
    splits: list[ServiceSplit] = []
    for name, dseed in zip(names, device_seeds):
        table = devices[name]
        for s in split_into_services(len(table), known_range, lesser_range, lesser_fraction,
                                     seed=dseed, device=name, first_service_id=len(splits)):
            s.y = table.labels[s.rows]
            splits.append(s)
    if not splits:
        raise ValueError("no device holds enough rows for a single service split")
    community_seed, assign_seed, noise_seed = (int(s.generate_state(1)[0]) for s in device_seeds[-3:])
    assign_communities(splits, n_communities, community_by, seed=community_seed)
    nodes = assign_to_nodes(splits, topology, seed=assign_seed, tau=tau, test_fraction=test_fraction)

    # fit encoding and scaling on pooled training rows only
    by_id = {s.service_id: s for s in splits}
    first = devices[names[0]]
    train_frames = [
        devices[by_id[sid].device].frame.iloc[by_id[sid].rows[pos]]
        for node in nodes for sid, pos in node.train if len(pos)
    ]
    fit_frame = pd.concat(train_frames, ignore_index=True) if train_frames else first.frame.iloc[:0]
    encoded, encoding_map = one_hot_encode(fit_frame, fit=True, columns=first.categorical)
    _, scaling_params = min_max_scale(encoded, fit=True)

    # both transforms act row by row, so each device table is transformed once
    transformed = {}
    for name in {s.device for s in splits}:
        raw = devices[name].frame
        enc = one_hot_encode(raw, fit=False, encoding_map=encoding_map)[0] if encoding_map else raw.astype(float)
        transformed[name] = min_max_scale(enc, fit=False, scaling_params=scaling_params)[0].to_numpy(dtype=float)
    for s in splits:
        s.X = transformed[s.device][s.rows]
    apply_community_noise(splits, noise_sigmas, seed=noise_seed)

    d = len(scaling_params)
    datasets = []
    for node in nodes:
        parts = {}
        for key, refs in (("train", node.train), ("test", node.test)):
            X = [by_id[sid].X[pos] for sid, pos in refs]
            y = [by_id[sid].y[pos] for sid, pos in refs]
            parts[key] = (np.vstack(X) if X else np.zeros((0, d)),
                          np.concatenate(y).astype(np.int64) if y else np.zeros(0, dtype=np.int64))
        datasets.append(NodeDataset(node.node_id, *parts["train"], *parts["test"], list(node.services)))
        topology.nodes[node.node_id].sample_count = len(parts["train"][1])

    node_of = {sid: n.node_id for n in nodes for sid in n.services}
    services = [
        {"service_id": s.service_id, "kind": s.kind, "community_id": s.community_id,
         "device": s.device, "size": len(s), "node_id": node_of[s.service_id]}
        for s in splits
    ]
    manifest = PartitionManifest(dataset_name, d, datasets, scaling_params, encoding_map, services,
                                 int(seed) if isinstance(seed, (int, np.integer)) else 0)
    manifest.validate()
    return manifest


def subsample_training(manifest: PartitionManifest, fraction: float, seed=0) -> PartitionManifest:
    """Keep a seeded ``fraction`` of each node's training rows (without replacement)."""
    if not 0.0 < fraction <= 1.0:
        raise ValueError("fraction must lie in (0, 1]")
    if fraction == 1.0:
        return manifest
    nodes = []
    for n in manifest.nodes:
        rng = np.random.default_rng([seed, n.node_id])
        keep = np.sort(rng.permutation(n.n_train)[: int(math.ceil(fraction * n.n_train))])
        nodes.append(NodeDataset(n.node_id, n.X_train[keep], n.y_train[keep], n.X_test, n.y_test, n.services))
    return PartitionManifest(manifest.dataset_name, manifest.feature_dim, nodes, manifest.scaling_params,
                             manifest.encoding_map, manifest.services, manifest.seed)
