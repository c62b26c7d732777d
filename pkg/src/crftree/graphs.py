"""Graph-structured instances: nodes with feature vectors, undirected edges, labelings."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Instance:
    """One labeling problem: node features, undirected edges with edge features,
    and optionally the ground-truth labeling (1-based class ids).

    Edges are stored with p < q. Arrays are read-only after construction.
    """

    node_features: np.ndarray          # (n, D_n) float
    edges: np.ndarray                  # (E, 2) int, each row p < q
    edge_features: np.ndarray          # (E, D_e) float
    truth: np.ndarray | None = None    # (n,) int in 1..K, or None

    @property
    def num_nodes(self) -> int:
        return self.node_features.shape[0]

    @property
    def num_edges(self) -> int:
        return self.edges.shape[0]


def build_instance(node_features, edge_list, truth=None, num_classes=None) -> Instance:
    """Validate and freeze an Instance.

    node_features: (n, D_n) array-like of finite reals.
    edge_list: iterable of (p, q, features) with p != q, indices in range,
        no duplicate undirected pair; stored canonically as p < q in input order.
    truth: optional length-n labeling with labels in 1..num_classes.

    Raises ValueError naming the offending node/edge on any violation.
    """
    X = np.asarray(node_features, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("node_features must be a nonempty 2-D array, got shape %s" % (X.shape,))
    n = X.shape[0]
    bad = np.where(~np.isfinite(X))
    if bad[0].size:
        raise ValueError(f"node {bad[0][0]}: non-finite feature value at dimension {bad[1][0]}")

    pairs = []
    feats = []
    seen: set[tuple[int, int]] = set()
    edge_dim = None
    for idx, (p, q, f) in enumerate(edge_list):
        p, q = int(p), int(q)
        if p == q:
            raise ValueError(f"edge {idx}: self-loop ({p}, {q})")
        if not (0 <= p < n and 0 <= q < n):
            raise ValueError(f"edge {idx}: node index out of range in ({p}, {q}), have {n} nodes")
        key = (min(p, q), max(p, q))
        if key in seen:
            raise ValueError(f"edge {idx}: duplicate undirected edge {key}")
        seen.add(key)
        f = np.asarray(f, dtype=float)
        if f.ndim != 1:
            raise ValueError(f"edge {idx}: features must be a 1-D vector")
        if edge_dim is None:
            edge_dim = f.shape[0]
        elif f.shape[0] != edge_dim:
            raise ValueError(f"edge {idx}: feature dimension {f.shape[0]} != {edge_dim}")
        if not np.all(np.isfinite(f)):
            raise ValueError(f"edge {idx}: non-finite feature value")
        pairs.append(key)
        feats.append(f)

    if pairs:
        E = np.asarray(pairs, dtype=np.int64)
        F = np.stack(feats)
    else:
        E = np.zeros((0, 2), dtype=np.int64)
        F = np.zeros((0, edge_dim if edge_dim is not None else 0), dtype=float)

    t = None
    if truth is not None:
        t = as_labeling(truth, n, num_classes)

    return Instance(_readonly(X), _readonly(E), _readonly(F), _readonly(t) if t is not None else None)


def as_labeling(labels, num_nodes: int, num_classes: int | None = None) -> np.ndarray:
    """Validate a labeling: length num_nodes, integer labels in 1..num_classes."""
    y = np.asarray(labels)
    if y.ndim != 1 or y.shape[0] != num_nodes:
        raise ValueError(f"labeling has length {y.shape[0] if y.ndim == 1 else y.shape}, expected {num_nodes}")
    if not np.issubdtype(y.dtype, np.integer):
        yi = y.astype(np.int64)
        if not np.array_equal(yi, y):
            raise ValueError("labels must be integers")
        y = yi
    else:
        y = y.astype(np.int64)
    if y.min(initial=1) < 1:
        raise ValueError(f"node {int(np.argmin(y))}: label {int(y.min())} below 1")
    if num_classes is not None and y.max(initial=1) > num_classes:
        raise ValueError(f"node {int(np.argmax(y))}: label {int(y.max())} above num_classes={num_classes}")
    return y


@dataclass(frozen=True)
class LossWeights:
    """Per-class misclassification costs c_k, k = 1..K. All >= 0, at least one > 0."""

    per_class: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.per_class, dtype=float)
        if c.ndim != 1 or c.shape[0] < 1:
            raise ValueError("per_class must be a nonempty 1-D vector")
        if np.any(c < 0) or not np.all(np.isfinite(c)):
            raise ValueError("loss weights must be finite and >= 0")
        if not np.any(c > 0):
            raise ValueError("at least one loss weight must be > 0")
        object.__setattr__(self, "per_class", _readonly(c))

    @property
    def num_classes(self) -> int:
        return self.per_class.shape[0]

    @staticmethod
    def uniform(num_classes: int) -> "LossWeights":
        return LossWeights(np.ones(num_classes))


def class_frequency_weights(instances, num_classes: int) -> LossWeights:
    """Costs inversely proportional to class frequency over all labeled nodes:
    c_k = total_nodes / (K * count_k). The frequency-weighted mean of c is 1.

    Raises ValueError naming any class absent from the data.
    """
    counts = np.zeros(num_classes, dtype=np.int64)
    for inst in instances:
        if inst.truth is None:
            raise ValueError("class_frequency_weights needs labeled instances")
        counts += np.bincount(inst.truth - 1, minlength=num_classes)
    if np.any(counts == 0):
        k = int(np.argmin(counts)) + 1
        raise ValueError(f"class {k} never appears in the data; supply loss weights explicitly")
    total = counts.sum()
    return LossWeights(total / (num_classes * counts))


def weighted_hamming_loss(truth: np.ndarray, pred: np.ndarray, weights: LossWeights) -> float:
    """Sum over nodes of c_{truth[p]} * [pred[p] != truth[p]]."""
    truth = np.asarray(truth)
    pred = np.asarray(pred)
    if truth.shape != pred.shape:
        raise ValueError(f"labeling length mismatch: {truth.shape} vs {pred.shape}")
    c = weights.per_class
    if truth.max(initial=1) > c.shape[0] or truth.min(initial=1) < 1:
        raise ValueError("truth labels outside 1..K for the given loss weights")
    return float(np.sum(c[truth - 1] * (pred != truth)))
