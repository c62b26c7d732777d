"""Binary-output decision trees trained on signed-weight examples.

The training objective is J(h) = sum_e net_weight_e * h(x_e) with h(x) in {0, 1}.
A leaf therefore outputs 1 exactly when the net weight reaching it is positive,
and a split is worth taking only if the children's clipped sums beat the parent's.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

# Minimum objective improvement for a split to be accepted.
SPLIT_TOL = 1e-12


@dataclass(frozen=True)
class Leaf:
    bit: int  # 0 or 1


@dataclass(frozen=True)
class Split:
    feature: int
    threshold: float
    left: Union["Split", Leaf]   # taken when value <= threshold
    right: Union["Split", Leaf]


TreeNode = Union[Split, Leaf]


@dataclass(frozen=True)
class DecisionTree:
    """Axis-aligned binary tree; evaluation routes left when value <= threshold."""

    root: TreeNode

    def evaluate(self, x) -> int:
        node = self.root
        x = np.asarray(x, dtype=float)
        while isinstance(node, Split):
            node = node.left if x[node.feature] <= node.threshold else node.right
        return node.bit

    def evaluate_many(self, X: np.ndarray) -> np.ndarray:
        """Vectorized evaluation: X is (N, D), returns (N,) float array of {0.0, 1.0}."""
        X = np.asarray(X, dtype=float)
        out = np.zeros(X.shape[0])
        stack = [(self.root, np.arange(X.shape[0]))]
        while stack:
            node, idx = stack.pop()
            if idx.size == 0:
                continue
            if isinstance(node, Leaf):
                out[idx] = node.bit
                continue
            goes_left = X[idx, node.feature] <= node.threshold
            stack.append((node.left, idx[goes_left]))
            stack.append((node.right, idx[~goes_left]))
        return out

    @property
    def depth(self) -> int:
        def d(node):
            if isinstance(node, Leaf):
                return 0
            return 1 + max(d(node.left), d(node.right))
        return d(self.root)

    def max_feature_index(self) -> int:
        """Largest feature index referenced, or -1 for a bare leaf."""
        best = -1
        stack = [self.root]
        while stack:
            node = stack.pop()
            if isinstance(node, Split):
                best = max(best, node.feature)
                stack.extend((node.left, node.right))
        return best

    def to_dict(self) -> dict:
        def rec(node):
            if isinstance(node, Leaf):
                return {"leaf": node.bit}
            return {
                "feature": node.feature,
                "threshold": node.threshold,
                "left": rec(node.left),
                "right": rec(node.right),
            }
        return rec(self.root)

    @staticmethod
    def from_dict(d: dict) -> "DecisionTree":
        def rec(nd):
            if "leaf" in nd:
                bit = int(nd["leaf"])
                if bit not in (0, 1):
                    raise ValueError(f"leaf value must be 0 or 1, got {nd['leaf']}")
                return Leaf(bit)
            return Split(int(nd["feature"]), float(nd["threshold"]), rec(nd["left"]), rec(nd["right"]))
        return DecisionTree(rec(d))


def constant_tree(bit: int) -> DecisionTree:
    return DecisionTree(Leaf(int(bit)))


def _best_split(X: np.ndarray, w: np.ndarray):
    """Best (gain, feature, threshold) over midpoint thresholds, or None.

    Gain of a split is max(0, sum_left) + max(0, sum_right). Ties break toward
    the lowest feature index, then the lowest threshold (strict > comparison
    while scanning features in order and thresholds ascending).
    """
    best = None
    for f in range(X.shape[1]):
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        cum = np.cumsum(w[order])
        total = cum[-1]
        boundary = np.nonzero(xs[:-1] < xs[1:])[0]
        if boundary.size == 0:
            continue
        left = cum[boundary]
        gains = np.maximum(left, 0.0) + np.maximum(total - left, 0.0)
        k = int(np.argmax(gains))  # first max: lowest threshold
        if best is None or gains[k] > best[0]:
            thr = 0.5 * (xs[boundary[k]] + xs[boundary[k] + 1])
            best = (float(gains[k]), f, float(thr))
    return best


def _grow(X: np.ndarray, w: np.ndarray, depth_left: int) -> tuple[TreeNode, float]:
    """Returns (node, J of node on this subset).

    The best split's immediate gain max(0,L)+max(0,R) can never fall below the
    leaf value max(0, L+R), so ties are common; a tied split may still pay off
    one level deeper (an XOR-shaped subset is the canonical case). We therefore
    always recurse while depth remains and prune afterwards: a subtree that
    does not beat its own best leaf collapses back to that leaf.
    """
    total = float(w.sum())
    leaf_value = max(0.0, total)
    leaf = Leaf(1 if total > 0 else 0)
    if depth_left == 0 or X.shape[0] <= 1:
        return leaf, leaf_value
    found = _best_split(X, w)
    if found is None:
        return leaf, leaf_value
    _, f, thr = found
    mask = X[:, f] <= thr
    left, j_left = _grow(X[mask], w[mask], depth_left - 1)
    right, j_right = _grow(X[~mask], w[~mask], depth_left - 1)
    if j_left + j_right <= leaf_value + SPLIT_TOL:
        return leaf, leaf_value
    return Split(f, thr, left, right), j_left + j_right


def train_weighted_tree(features, net_weights, max_depth: int = 2) -> DecisionTree:
    """Greedily grow a tree maximizing J(h) = sum_e net_weight_e * h(x_e).

    features: (N, D); net_weights: (N,) signed reals. Zero-weight examples are
    dropped. Growth recurses to max_depth choosing each split by immediate
    gain, then collapses any subtree that fails to improve J by more than
    SPLIT_TOL over its own best single leaf, so the final tree has no useless
    split and satisfies J(tree) >= J(best single leaf) >= 0.
    """
    if max_depth < 1:
        raise ValueError(f"max_depth must be >= 1, got {max_depth}")
    X = np.asarray(features, dtype=float)
    w = np.asarray(net_weights, dtype=float)
    if X.ndim != 2 or w.ndim != 1 or X.shape[0] != w.shape[0]:
        raise ValueError("features must be (N, D) and net_weights (N,) with matching N")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(w))):
        raise ValueError("features and net weights must be finite")
    if w.shape[0] == 0:
        raise ValueError("cannot train a tree on an empty example set")
    keep = w != 0.0
    X, w = X[keep], w[keep]
    if X.shape[0] == 0:
        raise ValueError("cannot train a tree when every net weight is zero")
    root, _ = _grow(X, w, max_depth)
    return DecisionTree(root)


def tree_objective(tree: DecisionTree, features, net_weights) -> float:
    """J(tree) on the given signed examples."""
    X = np.asarray(features, dtype=float)
    w = np.asarray(net_weights, dtype=float)
    if X.shape[0] == 0:
        return 0.0
    return float(np.dot(w, tree.evaluate_many(X)))
