"""Tree-potential CRFs over graph-structured data: joint learning of decision
tree feature maps and ensemble weights, with MAP inference by graph cuts."""

from .baselines import LinearEnergyModel, train_linear_ssvm
from .graphs import (Instance, LossWeights, as_labeling, build_instance,
                     class_frequency_weights, weighted_hamming_loss)
from .inference import (alpha_expansion, loss_augmented_inference, map_inference,
                        min_energy_binary)
from .learner import TrainConfig, cutting_plane, train_crftree
from .maxflow import FlowNetwork, max_flow_min_cut
from .metrics import f_score, intersection_over_union, pixel_accuracy
from .potentials import PotentialModel, energy, joint_feature_map, pairwise_feature_map, unary_feature_map
from .qp import ConstraintEntry, QPSolution, SolverError, extract_lambda, solve_restricted_qp
from .synthetic import synth_grid_task
from .trees import DecisionTree, train_weighted_tree, tree_objective

__version__ = "0.1.0"

__all__ = [
    "Instance", "LossWeights", "as_labeling", "build_instance", "class_frequency_weights",
    "weighted_hamming_loss", "DecisionTree", "train_weighted_tree", "tree_objective",
    "PotentialModel", "energy", "joint_feature_map", "pairwise_feature_map", "unary_feature_map",
    "FlowNetwork", "max_flow_min_cut", "alpha_expansion", "loss_augmented_inference",
    "map_inference", "min_energy_binary", "ConstraintEntry", "QPSolution", "SolverError",
    "extract_lambda", "solve_restricted_qp", "TrainConfig", "cutting_plane", "train_crftree",
    "LinearEnergyModel", "train_linear_ssvm", "synth_grid_task",
    "f_score", "intersection_over_union", "pixel_accuracy",
    "__version__",
]
