"""Shared fixtures and independent oracles.

Every oracle here recomputes its answer from first principles (explicit
enumeration, brute-force search, independent arithmetic) rather than calling
the library code paths under test, so agreement between the two routes is
evidence, not tautology.
"""

from __future__ import annotations

import itertools

import numpy as np
import pytest

from crftree.graphs import Instance, build_instance
from crftree.maxflow import FlowNetwork
from crftree.potentials import PotentialModel
from crftree.trees import DecisionTree, Leaf, Split


# ---------------------------------------------------------------------------
# Independent tree evaluation (own recursion, not DecisionTree.evaluate)
# ---------------------------------------------------------------------------

def walk_tree(node, x) -> int:
    """Re-derives the routing rule: left iff x[feature] <= threshold."""
    while isinstance(node, Split):
        node = node.left if x[node.feature] <= node.threshold else node.right
    assert isinstance(node, Leaf)
    return node.bit


def oracle_tree_outputs(tree: DecisionTree, X: np.ndarray) -> np.ndarray:
    return np.array([walk_tree(tree.root, x) for x in np.atleast_2d(X)], dtype=float)


def oracle_tables(inst: Instance, model: PotentialModel):
    """(U, theta) recomputed from scratch: U[p, c] = sum_t w_u[c][t] * h_ct(x_p),
    theta[e] = sum_t w_p[t] * h2_t(edge features e)."""
    n, K = inst.num_nodes, model.num_classes
    U = np.zeros((n, K))
    for c in range(K):
        for t, tree in enumerate(model.unary_groups[c]):
            U[:, c] += model.w_unary[c][t] * oracle_tree_outputs(tree, inst.node_features)
    theta = np.zeros(inst.num_edges)
    for t, tree in enumerate(model.pairwise_group):
        if inst.num_edges:
            theta += model.w_pairwise[t] * oracle_tree_outputs(tree, inst.edge_features)
    return U, theta


def oracle_energy(U: np.ndarray, theta: np.ndarray, edges: np.ndarray, labels: np.ndarray) -> float:
    """Independent energy formula: unary of the taken class per node plus the
    pairwise coefficient of every edge whose endpoints disagree."""
    labels = np.asarray(labels)
    e = float(sum(U[p, labels[p] - 1] for p in range(U.shape[0])))
    for idx in range(edges.shape[0]):
        p, q = int(edges[idx, 0]), int(edges[idx, 1])
        if labels[p] != labels[q]:
            e += float(theta[idx])
    return e


# ---------------------------------------------------------------------------
# Exhaustive labeling enumeration
# ---------------------------------------------------------------------------

def all_labelings(n: int, K: int) -> np.ndarray:
    """All K^n labelings as an (K^n, n) int array, lexicographic order."""
    return np.array(list(itertools.product(range(1, K + 1), repeat=n)), dtype=np.int64)


def batch_energies(U: np.ndarray, theta: np.ndarray, edges: np.ndarray,
                   labelings: np.ndarray) -> np.ndarray:
    """Vectorized independent energies for a (M, n) labeling matrix."""
    n = U.shape[0]
    unary = U[np.arange(n)[None, :], labelings - 1].sum(axis=1)
    if edges.shape[0]:
        cut = labelings[:, edges[:, 0]] != labelings[:, edges[:, 1]]
        unary = unary + cut @ theta
    return unary


def exhaustive_min_energy(U: np.ndarray, theta: np.ndarray, edges: np.ndarray, K: int):
    """(minimum energy, first argmin labeling) by full enumeration."""
    labs = all_labelings(U.shape[0], K)
    en = batch_energies(U, theta, edges, labs)
    j = int(np.argmin(en))
    return float(en[j]), labs[j]


# ---------------------------------------------------------------------------
# Brute-force min-cut oracle
# ---------------------------------------------------------------------------

def exhaustive_min_cut(net: FlowNetwork) -> float:
    """Minimum cut capacity over all 2^n source/sink partitions."""
    n = net.num_nodes
    best = np.inf
    for mask in range(1 << n):
        side = [(mask >> p) & 1 for p in range(n)]  # 1 = source side
        cap = 0.0
        for p in range(n):
            if side[p]:
                cap += float(net.sink_caps[p])
            else:
                cap += float(net.source_caps[p])
        for p, q, c in net.edges:
            if side[p] != side[q]:
                cap += float(c)
        best = min(best, cap)
    return best


def cut_capacity(net: FlowNetwork, source_side: np.ndarray) -> float:
    cap = 0.0
    for p in range(net.num_nodes):
        cap += float(net.sink_caps[p]) if source_side[p] else float(net.source_caps[p])
    for p, q, c in net.edges:
        if bool(source_side[p]) != bool(source_side[q]):
            cap += float(c)
    return cap


def random_network(rng: np.random.Generator, max_nodes: int = 8) -> FlowNetwork:
    n = int(rng.integers(1, max_nodes + 1))
    src = rng.uniform(0.0, 3.0, n) * (rng.random(n) < 0.8)
    snk = rng.uniform(0.0, 3.0, n) * (rng.random(n) < 0.8)
    edges = [(p, q, float(rng.uniform(0.0, 2.0)))
             for p in range(n) for q in range(p + 1, n) if rng.random() < 0.45]
    return FlowNetwork(n, src, snk, edges)


# ---------------------------------------------------------------------------
# Exhaustive stump-search oracle for weighted trees
# ---------------------------------------------------------------------------

def exhaustive_stump_objective(X: np.ndarray, w: np.ndarray) -> float:
    """Best J over every depth-1 tree: both constant leaves plus every
    (feature, midpoint-threshold) stump with each leaf bit set optimally."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    w = np.asarray(w, dtype=float)
    total = float(w.sum())
    best = max(0.0, total)  # leaf 0 gives J = 0, leaf 1 gives J = total
    for f in range(X.shape[1]):
        vals = np.unique(X[:, f])
        for lo, hi in zip(vals[:-1], vals[1:]):
            thr = 0.5 * (lo + hi)
            left = float(w[X[:, f] <= thr].sum())
            j = max(0.0, left) + max(0.0, total - left)
            best = max(best, j)
    return best


def dyadic_weights(rng: np.random.Generator, n: int) -> np.ndarray:
    """Nonzero multiples of 1/8 in [-2, 2]: sums of at most a few dozen of
    these are exact in binary floating point, so independently ordered
    summations agree bit-for-bit."""
    ticks = rng.integers(-16, 17, n)
    ticks[ticks == 0] = 1
    return ticks / 8.0


# ---------------------------------------------------------------------------
# Grid-search QP oracle
# ---------------------------------------------------------------------------

def qp_objective(W: np.ndarray, D: np.ndarray, b: np.ndarray, C: float) -> np.ndarray:
    """Objective 0.5*|w|^2 + C*xi(w) for a batch of w rows, with the exact
    optimal slack xi(w) = max(0, max_j b_j - w . d_j)."""
    W = np.atleast_2d(W)
    margins = b[None, :] - W @ D.T if D.shape[0] else np.zeros((W.shape[0], 1))
    xi = np.maximum(0.0, margins.max(axis=1))
    return 0.5 * (W * W).sum(axis=1) + C * xi


def grid_qp_oracle(D: np.ndarray, b: np.ndarray, C: float, dim: int,
                   points: int = 15, rounds: int = 10) -> float:
    """Refined lattice search over w >= 0 (xi eliminated exactly). The box
    starts at [0, wmax] per axis with wmax from 0.5*|w|^2 <= objective(0),
    then shrinks around the incumbent; the objective is strongly convex in w,
    so the incumbent tracks the unique minimizer."""
    if dim == 0:
        return float(qp_objective(np.zeros((1, 0)), D, b, C)[0])
    wmax = float(np.sqrt(2.0 * C * max(b.max(initial=0.0), 0.0))) + 0.5
    lo = np.zeros(dim)
    hi = np.full(dim, wmax)
    best_w = np.zeros(dim)
    for _ in range(rounds):
        axes = [np.linspace(lo[i], hi[i], points) for i in range(dim)]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, dim)
        vals = qp_objective(grid, D, b, C)
        best_w = grid[int(np.argmin(vals))]
        span = (hi - lo) / (points - 1)
        lo = np.maximum(0.0, best_w - 2.5 * span)
        hi = best_w + 2.5 * span
    return float(qp_objective(best_w[None, :], D, b, C)[0])


def kkt_report(w: np.ndarray, xi: float, mu: np.ndarray, D: np.ndarray, b: np.ndarray, C: float):
    """Independent KKT residuals for the restricted problem:
    stationarity (projected), complementary slackness, primal/dual feasibility."""
    v = D.T @ mu if D.shape[0] else np.zeros_like(w)
    stat = w - v
    stat = np.where((w <= 1e-12) & (stat > 0.0), 0.0, stat)  # multiplier of w >= 0
    slacks = b - D @ w if D.shape[0] else np.zeros(0)
    comp = np.abs(mu * (slacks - xi)) if D.shape[0] else np.zeros(0)
    return {
        "stationarity": float(np.abs(stat).max(initial=0.0)),
        "complementarity": float(comp.max(initial=0.0)),
        "primal": float(np.maximum(slacks - xi, 0.0).max(initial=0.0)),
        "slack_comp": abs(xi * (C - float(mu.sum()))),
        "dual_sum": float(mu.sum()),
        "dual_min": float(mu.min(initial=0.0)),
    }


# ---------------------------------------------------------------------------
# Random model / instance generators
# ---------------------------------------------------------------------------

def random_tree(rng: np.random.Generator, dim: int, max_depth: int = 2) -> DecisionTree:
    def grow(depth: int):
        if depth == max_depth or rng.random() < 0.3:
            return Leaf(int(rng.integers(0, 2)))
        return Split(int(rng.integers(0, dim)), float(rng.normal()),
                     grow(depth + 1), grow(depth + 1))
    root = grow(0)
    if isinstance(root, Leaf):  # keep at least one split so outputs vary
        root = Split(int(rng.integers(0, dim)), float(rng.normal()),
                     Leaf(int(rng.integers(0, 2))), Leaf(1 - root.bit))
    return DecisionTree(root)


def random_model(rng: np.random.Generator, K: int, rounds: int,
                 node_dim: int, edge_dim: int) -> PotentialModel:
    model = PotentialModel(K)
    for _ in range(rounds):
        model.append_round([random_tree(rng, node_dim) for _ in range(K)],
                           random_tree(rng, edge_dim))
    model.w_unary = [rng.uniform(0.0, 2.0, rounds) for _ in range(K)]
    model.w_pairwise = rng.uniform(0.0, 2.0, rounds)
    model.validate()
    return model


def random_instance(rng: np.random.Generator, n: int, node_dim: int, edge_dim: int,
                    K: int, edge_prob: float = 0.4) -> Instance:
    X = rng.normal(size=(n, node_dim))
    pairs = [(p, q) for p in range(n) for q in range(p + 1, n) if rng.random() < edge_prob]
    if not pairs and n >= 2:
        pairs = [(0, 1)]  # keep the edge-feature width well-defined
    E = [(p, q, rng.normal(size=edge_dim)) for p, q in pairs]
    truth = rng.integers(1, K + 1, n)
    return build_instance(X, E, truth=truth, num_classes=K)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20260819)
