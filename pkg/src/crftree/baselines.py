"""Linear-feature-map structured SVM baseline.

Same trainer and inference as the tree model, but the basis is fixed up front:
each class's unary block sees [x, -x, 1] (signed copies plus a bias, so the
nonnegative weights span every affine score), and the pairwise block sees the
raw edge features, which must be nonnegative to keep cut costs submodular.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graphs import Instance, LossWeights
from .learner import CPStats, TrainConfig, _check_dataset, cutting_plane
from .potentials import PotentialTables


@dataclass
class LinearEnergyModel:
    num_classes: int
    node_dim: int
    edge_dim: int
    w_unary: list[np.ndarray] = field(default_factory=list)
    w_pairwise: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        if not self.w_unary:
            self.w_unary = [np.zeros(2 * self.node_dim + 1) for _ in range(self.num_classes)]
        if self.w_pairwise.shape[0] != self.edge_dim:
            self.w_pairwise = np.zeros(self.edge_dim)

    @property
    def unary_block_dim(self) -> int:
        return 2 * self.node_dim + 1

    @property
    def dim(self) -> int:
        return self.num_classes * self.unary_block_dim + self.edge_dim

    def split_weights(self, w: np.ndarray) -> tuple[list[np.ndarray], np.ndarray]:
        w = np.asarray(w, dtype=float)
        if w.shape != (self.dim,):
            raise ValueError(f"weight vector has shape {w.shape}, model dimension is {self.dim}")
        B = self.unary_block_dim
        blocks = [w[c * B:(c + 1) * B] for c in range(self.num_classes)]
        return blocks, w[self.num_classes * B:]

    def flat_weights(self) -> np.ndarray:
        return np.concatenate([*self.w_unary, self.w_pairwise])

    def set_flat_weights(self, w: np.ndarray):
        blocks, pw = self.split_weights(w)
        self.w_unary = [b.copy() for b in blocks]
        self.w_pairwise = pw.copy()

    def build_tables(self, inst: Instance) -> PotentialTables:
        X = inst.node_features
        basis = np.hstack([X, -X, np.ones((X.shape[0], 1))])
        F = inst.edge_features
        if F.size and np.any(F < 0):
            raise ValueError("linear pairwise features must be >= 0 to keep cut costs submodular")
        return PotentialTables([basis] * self.num_classes, F, inst.edges)


def train_linear_ssvm(instances: list[Instance], num_classes: int, cfg: TrainConfig,
                      loss_weights: LossWeights | None = None) -> tuple[LinearEnergyModel, CPStats]:
    """One cutting-plane fit over the fixed linear basis (no column generation)."""
    truths = _check_dataset(instances, num_classes)
    lw = loss_weights if loss_weights is not None else LossWeights.uniform(num_classes)
    model = LinearEnergyModel(num_classes, instances[0].node_features.shape[1],
                              instances[0].edge_features.shape[1])
    w, _, stats = cutting_plane(instances, truths, model, lw, cfg)
    model.set_flat_weights(w)
    return model, stats
