"""Joint training: column generation of trees driven by the dual weights of a
1-slack structured SVM, solved by a cutting-plane loop.

Each generation round trains one unary tree per class and one pairwise tree on
signed example sets derived from the current dual weights lambda_{(i, y)}:
a node supports class c's tree positively where a violating labeling y says c
and negatively where the truth says c; an edge supports the pairwise tree
positively where y cuts it and negatively where the truth cuts it. The trees'
objectives are exactly their constraint-violation scores, so a round with all
objectives ~ 0 means no useful column remains. New trees enter with weight 0
(the previous weights warm-start the next cutting-plane call), and the
cutting-plane loop re-solves the restricted QP after adding, per iteration,
the single most violated aggregated constraint at the current weights.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .graphs import Instance, LossWeights, as_labeling, weighted_hamming_loss
from .inference import loss_augmented_map
from .potentials import PotentialModel
from .qp import ConstraintEntry, extract_lambda, solve_restricted_qp
from .trees import DecisionTree, constant_tree, train_weighted_tree, tree_objective

logger = logging.getLogger(__name__)

# A generation round whose best tree objective is below this adds nothing.
KKT_TOL = 1e-9


@dataclass(frozen=True)
class TrainConfig:
    C: float = 100.0
    cg_iters: int = 50
    tree_depth: int = 2
    eps_cp: float = 0.01
    max_cp_iters: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.C <= 0:
            raise ValueError(f"C must be positive, got {self.C}")
        if self.cg_iters < 0:
            raise ValueError(f"cg_iters must be >= 0, got {self.cg_iters}")
        if self.tree_depth < 1:
            raise ValueError(f"tree_depth must be >= 1, got {self.tree_depth}")
        if self.eps_cp <= 0:
            raise ValueError(f"eps_cp must be positive, got {self.eps_cp}")
        if self.max_cp_iters < 1:
            raise ValueError(f"max_cp_iters must be >= 1, got {self.max_cp_iters}")


@dataclass
class CPStats:
    iterations: int
    objectives: list[float]
    xi: float
    final_violation: float
    per_example_slacks: np.ndarray


@dataclass
class RoundStats:
    round: int
    cp_iterations: int
    objective: float
    xi: float
    max_tree_objective: float
    train_risk: float


def _check_dataset(instances: list[Instance], num_classes: int) -> list[np.ndarray]:
    if not instances:
        raise ValueError("training needs at least one instance")
    node_dim = instances[0].node_features.shape[1]
    edge_dim = instances[0].edge_features.shape[1]
    truths = []
    for i, inst in enumerate(instances):
        if inst.truth is None:
            raise ValueError(f"instance {i} has no ground-truth labeling")
        if inst.node_features.shape[1] != node_dim:
            raise ValueError(f"instance {i}: node feature dimension {inst.node_features.shape[1]} != {node_dim}")
        if inst.num_edges and inst.edge_features.shape[1] != edge_dim:
            raise ValueError(f"instance {i}: edge feature dimension {inst.edge_features.shape[1]} != {edge_dim}")
        truths.append(as_labeling(inst.truth, inst.num_nodes, num_classes))
    return truths


def unary_signed_sets(lam: dict, instances: list[Instance], truths: list[np.ndarray],
                      num_classes: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Per class: (stacked node features, net weights), zero-weight rows dropped."""
    offsets = np.cumsum([0] + [inst.num_nodes for inst in instances])
    X_all = np.vstack([inst.node_features for inst in instances])
    out = []
    for c in range(1, num_classes + 1):
        net = np.zeros(X_all.shape[0])
        for (i, y), weight in lam.items():
            y = np.asarray(y)
            sl = slice(offsets[i], offsets[i + 1])
            net[sl] += weight * ((y == c).astype(float) - (truths[i] == c))
        keep = net != 0.0
        out.append((X_all[keep], net[keep]))
    return out


def pairwise_signed_set(lam: dict, instances: list[Instance],
                        truths: list[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    """(stacked edge features, net weights): + where a violating labeling cuts
    an edge, - where the truth cuts it; zero rows dropped."""
    offsets = np.cumsum([0] + [inst.num_edges for inst in instances])
    F_all = np.vstack([inst.edge_features for inst in instances])
    net = np.zeros(F_all.shape[0])
    for (i, y), weight in lam.items():
        y = np.asarray(y)
        edges = instances[i].edges
        if edges.shape[0] == 0:
            continue
        cut_y = y[edges[:, 0]] != y[edges[:, 1]]
        cut_t = truths[i][edges[:, 0]] != truths[i][edges[:, 1]]
        net[offsets[i]:offsets[i + 1]] += weight * (cut_y.astype(float) - cut_t)
    keep = net != 0.0
    return F_all[keep], net[keep]


def _train_or_constant(X: np.ndarray, w: np.ndarray, depth: int, what: str) -> DecisionTree:
    if X.shape[0] == 0:
        logger.debug("%s: no nonzero-weight examples this round, emitting constant-0 tree", what)
        return constant_tree(0)
    return train_weighted_tree(X, w, depth)


def generate_unary_trees(lam: dict, instances: list[Instance], truths: list[np.ndarray],
                         num_classes: int, tree_depth: int) -> list[DecisionTree]:
    sets = unary_signed_sets(lam, instances, truths, num_classes)
    return [_train_or_constant(X, w, tree_depth, f"unary class {c + 1}") for c, (X, w) in enumerate(sets)]


def generate_pairwise_tree(lam: dict, instances: list[Instance], truths: list[np.ndarray],
                           tree_depth: int) -> DecisionTree:
    X, w = pairwise_signed_set(lam, instances, truths)
    return _train_or_constant(X, w, tree_depth, "pairwise")


def kkt_violation(lam: dict, instances: list[Instance], truths: list[np.ndarray], num_classes: int,
                  unary_trees: list[DecisionTree], pairwise_tree: DecisionTree) -> float:
    """Maximum constraint violation over the candidate trees, which equals each
    tree's training objective on its signed set. Always >= 0."""
    best = 0.0
    for (X, w), tree in zip(unary_signed_sets(lam, instances, truths, num_classes), unary_trees):
        best = max(best, tree_objective(tree, X, w))
    Xp, wp = pairwise_signed_set(lam, instances, truths)
    return max(best, tree_objective(pairwise_tree, Xp, wp))


def cutting_plane(instances: list[Instance], truths: list[np.ndarray], model, lw: LossWeights,
                  cfg: TrainConfig, warm_w: np.ndarray | None = None):
    """Cutting-plane loop for the 1-slack problem over the model's current basis.

    The working set starts empty. Each iteration aggregates the per-example
    most-violating labelings (found by loss-augmented inference at the current
    weights) into one constraint over the examples whose individual violation
    is positive, solves the restricted QP, and stops once the newest
    constraint's violation is at most eps_cp.

    Returns (w, lambda, CPStats).
    """
    m = len(instances)
    dim = model.dim
    tables = [model.build_tables(inst) for inst in instances]
    psi_truth = [tables[i].joint_feature_map(truths[i]) for i in range(m)]
    costs = lw.per_class

    def most_violated(w):
        w_u, w_p = model.split_weights(w)
        G = np.zeros((m, dim))
        deltas = np.zeros(m)
        labelings = []
        for i, tb in enumerate(tables):
            U = tb.unary_energies(w_u)
            theta = tb.edge_coeffs(w_p)
            y = loss_augmented_map(U, theta, tb.edges, truths[i], costs)
            labelings.append(y)
            G[i] = tb.joint_feature_map(y) - psi_truth[i]
            deltas[i] = weighted_hamming_loss(truths[i], y, lw)
        v = deltas - G @ w
        r = v > 0.0
        scale = 1.0 / m
        d = scale * (r.astype(float) @ G)
        b = scale * float(deltas[r].sum())
        return ConstraintEntry(r, labelings, d, b), v

    w = np.zeros(dim) if warm_w is None else np.asarray(warm_w, dtype=float)
    entry, v = most_violated(w)
    working: list[ConstraintEntry] = []
    mu = np.zeros(0)
    objectives: list[float] = []
    xi = 0.0
    violation = np.inf
    iterations = 0
    for _ in range(cfg.max_cp_iters):
        working.append(entry)
        sol = solve_restricted_qp(working, cfg.C, dim, init_mu=np.append(mu, 0.0))
        w, xi, mu = sol.w, sol.xi, sol.mu
        objectives.append(sol.objective)
        iterations += 1
        entry, v = most_violated(w)
        violation = entry.b - float(w @ entry.d) - xi
        if violation <= cfg.eps_cp:
            break
    lam = extract_lambda(mu, working, m)
    stats = CPStats(iterations, objectives, xi, violation, np.maximum(v, 0.0))
    return w, lam, stats


def _train_risk(w: np.ndarray, slacks: np.ndarray, C: float) -> float:
    return 0.5 * float(w @ w) + C * float(slacks.mean())


def initial_lambda(instances: list[Instance], truths: list[np.ndarray], num_classes: int,
                   lw: LossWeights, C: float) -> dict:
    """Dual weights before any trees exist: the pure-loss most-violating
    labeling of each example gets mass C / m."""
    m = len(instances)
    empty = PotentialModel(num_classes)
    lam = {}
    for i, inst in enumerate(instances):
        tb = empty.build_tables(inst)
        y = loss_augmented_map(tb.unary_energies(empty.w_unary), tb.edge_coeffs(empty.w_pairwise),
                               tb.edges, truths[i], lw.per_class)
        lam[(i, tuple(int(c) for c in y))] = C / m
    return lam


def train_crftree(instances: list[Instance], num_classes: int, cfg: TrainConfig,
                  loss_weights: LossWeights | None = None) -> tuple[PotentialModel, list[RoundStats]]:
    """Run cfg.cg_iters generation rounds, each followed by a cutting-plane
    re-fit of all weights. Stops early when no candidate tree has a positive
    objective. Deterministic: identical config and data give identical models.

    Returns (model, per-round log).
    """
    truths = _check_dataset(instances, num_classes)
    lw = loss_weights if loss_weights is not None else LossWeights.uniform(num_classes)
    if lw.num_classes != num_classes:
        raise ValueError("loss weights disagree with num_classes")
    model = PotentialModel(num_classes)
    lam = initial_lambda(instances, truths, num_classes, lw, cfg.C)
    log: list[RoundStats] = []
    for rnd in range(1, cfg.cg_iters + 1):
        unary_trees = generate_unary_trees(lam, instances, truths, num_classes, cfg.tree_depth)
        pairwise_tree = generate_pairwise_tree(lam, instances, truths, cfg.tree_depth)
        max_obj = kkt_violation(lam, instances, truths, num_classes, unary_trees, pairwise_tree)
        if max_obj <= KKT_TOL:
            logger.info("round %d: no tree with positive objective (max %.3e), stopping", rnd, max_obj)
            break
        model.append_round(unary_trees, pairwise_tree)
        w, lam, cp = cutting_plane(instances, truths, model, lw, cfg, warm_w=model.flat_weights())
        model.set_flat_weights(w)
        risk = _train_risk(w, cp.per_example_slacks, cfg.C)
        row = RoundStats(rnd, cp.iterations, cp.objectives[-1], cp.xi, max_obj, risk)
        log.append(row)
        logger.info("round %d: cp_iters=%d objective=%.6f xi=%.6f max_tree_obj=%.6f train_risk=%.6f",
                    row.round, row.cp_iterations, row.objective, row.xi, row.max_tree_objective, row.train_risk)
    return model, log
