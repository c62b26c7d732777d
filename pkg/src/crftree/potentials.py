"""CRF potentials built from tree ensembles, with cached tree outputs.

The energy of a labeling decomposes as

    E(y) = sum_p  w_u[y_p] . H_{y_p}(x_p)  +  sum_{(p,q)}  w_pw . H2(x_pq) * [y_p != y_q]

where H_c stacks the outputs of class c's unary trees on a node and H2 stacks
the pairwise trees' outputs on an edge. E(y) equals dot(w, joint_feature_map(y))
with w the concatenation of the K unary blocks followed by the pairwise block.

Tree outputs depend only on (instance, trees), so they are evaluated once per
instance into PotentialTables and reused across weight updates; a table is
rebuilt only when trees are added.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graphs import Instance, as_labeling
from .trees import DecisionTree


@dataclass
class PotentialTables:
    """Per-instance basis outputs: unary[c] is (n, T_c), pairwise is (E, T2)."""

    unary: list[np.ndarray]
    pairwise: np.ndarray
    edges: np.ndarray  # (E, 2)

    @property
    def num_nodes(self) -> int:
        return self.unary[0].shape[0]

    def unary_energies(self, w_unary: list[np.ndarray]) -> np.ndarray:
        """(n, K) matrix of per-node per-class unary energies."""
        return np.stack([self.unary[c] @ w_unary[c] for c in range(len(self.unary))], axis=1)

    def edge_coeffs(self, w_pairwise: np.ndarray) -> np.ndarray:
        """(E,) vector of pairwise cut costs."""
        return self.pairwise @ w_pairwise

    def unary_feature_map(self, labels: np.ndarray) -> np.ndarray:
        blocks = [self.unary[c][labels == c + 1].sum(axis=0) for c in range(len(self.unary))]
        return np.concatenate(blocks) if blocks else np.zeros(0)

    def pairwise_feature_map(self, labels: np.ndarray) -> np.ndarray:
        if self.edges.shape[0] == 0:
            return np.zeros(self.pairwise.shape[1])
        cut = labels[self.edges[:, 0]] != labels[self.edges[:, 1]]
        return self.pairwise[cut].sum(axis=0)

    def joint_feature_map(self, labels: np.ndarray) -> np.ndarray:
        return np.concatenate([self.unary_feature_map(labels), self.pairwise_feature_map(labels)])

    def energy(self, labels: np.ndarray, w_unary: list[np.ndarray], w_pairwise: np.ndarray) -> float:
        """Per-node/per-edge summation of the energy (not the dot-product route)."""
        n = self.num_nodes
        total = 0.0
        for p in range(n):
            c = labels[p] - 1
            total += float(self.unary[c][p] @ w_unary[c])
        if self.edges.shape[0]:
            cut = labels[self.edges[:, 0]] != labels[self.edges[:, 1]]
            coeffs = self.edge_coeffs(w_pairwise)
            total += float(coeffs[cut].sum())
        return total


def _evaluate_group(trees: list[DecisionTree], X: np.ndarray) -> np.ndarray:
    if not trees:
        return np.zeros((X.shape[0], 0))
    return np.stack([t.evaluate_many(X) for t in trees], axis=1)


@dataclass
class PotentialModel:
    """Tree ensemble potentials: K unary groups and one pairwise group, all of
    equal length T (one tree per group per generation round), with nonnegative
    weight blocks of matching shapes.
    """

    num_classes: int
    unary_groups: list[list[DecisionTree]] = field(default_factory=list)
    pairwise_group: list[DecisionTree] = field(default_factory=list)
    w_unary: list[np.ndarray] = field(default_factory=list)
    w_pairwise: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        if self.num_classes < 2:
            raise ValueError(f"num_classes must be >= 2, got {self.num_classes}")
        if not self.unary_groups:
            self.unary_groups = [[] for _ in range(self.num_classes)]
        if not self.w_unary:
            self.w_unary = [np.zeros(len(g)) for g in self.unary_groups]
        self.w_pairwise = np.asarray(self.w_pairwise, dtype=float)
        self.w_unary = [np.asarray(w, dtype=float) for w in self.w_unary]
        self.validate()

    def validate(self):
        if len(self.unary_groups) != self.num_classes:
            raise ValueError(f"expected {self.num_classes} unary groups, got {len(self.unary_groups)}")
        T = len(self.pairwise_group)
        for c, g in enumerate(self.unary_groups):
            if len(g) != T:
                raise ValueError(f"unary group {c + 1} has {len(g)} trees, pairwise group has {T}")
            if self.w_unary[c].shape != (T,):
                raise ValueError(f"weight block for class {c + 1} has shape {self.w_unary[c].shape}, expected ({T},)")
        if self.w_pairwise.shape != (T,):
            raise ValueError(f"pairwise weight block has shape {self.w_pairwise.shape}, expected ({T},)")
        for w in [*self.w_unary, self.w_pairwise]:
            if w.size and (np.any(w < 0) or not np.all(np.isfinite(w))):
                raise ValueError("weights must be finite and >= 0")

    @property
    def num_rounds(self) -> int:
        return len(self.pairwise_group)

    @property
    def dim(self) -> int:
        return self.num_classes * self.num_rounds + self.num_rounds

    def flat_weights(self) -> np.ndarray:
        return np.concatenate([*self.w_unary, self.w_pairwise]) if self.dim else np.zeros(0)

    def split_weights(self, w: np.ndarray) -> tuple[list[np.ndarray], np.ndarray]:
        """Slice a flat vector into (unary blocks, pairwise block)."""
        w = np.asarray(w, dtype=float)
        if w.shape != (self.dim,):
            raise ValueError(f"weight vector has shape {w.shape}, model dimension is {self.dim}")
        T = self.num_rounds
        blocks = [w[c * T:(c + 1) * T] for c in range(self.num_classes)]
        return blocks, w[self.num_classes * T:]

    def set_flat_weights(self, w: np.ndarray):
        blocks, pw = self.split_weights(w)
        if np.any(w < 0):
            raise ValueError("weights must be >= 0")
        self.w_unary = [b.copy() for b in blocks]
        self.w_pairwise = pw.copy()

    def append_round(self, unary_trees: list[DecisionTree], pairwise_tree: DecisionTree):
        """Add one tree per class plus one pairwise tree, all with weight 0."""
        if len(unary_trees) != self.num_classes:
            raise ValueError(f"expected {self.num_classes} unary trees, got {len(unary_trees)}")
        for c, t in enumerate(unary_trees):
            self.unary_groups[c] = [*self.unary_groups[c], t]
            self.w_unary[c] = np.append(self.w_unary[c], 0.0)
        self.pairwise_group = [*self.pairwise_group, pairwise_tree]
        self.w_pairwise = np.append(self.w_pairwise, 0.0)

    def build_tables(self, inst: Instance) -> PotentialTables:
        unary = [_evaluate_group(g, inst.node_features) for g in self.unary_groups]
        pairwise = _evaluate_group(self.pairwise_group, inst.edge_features)
        return PotentialTables(unary, pairwise, inst.edges)


def unary_feature_map(labels, inst: Instance, model, tables: PotentialTables | None = None) -> np.ndarray:
    y = as_labeling(labels, inst.num_nodes, model.num_classes)
    tables = tables or model.build_tables(inst)
    return tables.unary_feature_map(y)


def pairwise_feature_map(labels, inst: Instance, model, tables: PotentialTables | None = None) -> np.ndarray:
    y = as_labeling(labels, inst.num_nodes, model.num_classes)
    tables = tables or model.build_tables(inst)
    return tables.pairwise_feature_map(y)


def joint_feature_map(labels, inst: Instance, model, tables: PotentialTables | None = None) -> np.ndarray:
    y = as_labeling(labels, inst.num_nodes, model.num_classes)
    tables = tables or model.build_tables(inst)
    return tables.joint_feature_map(y)


def energy(labels, inst: Instance, model, tables: PotentialTables | None = None) -> float:
    """E(labels) summed per node and per cut edge; equals dot(flat weights,
    joint_feature_map) up to float reordering (within 1e-9)."""
    y = as_labeling(labels, inst.num_nodes, model.num_classes)
    tables = tables or model.build_tables(inst)
    return tables.energy(y, model.w_unary, model.w_pairwise)
