"""Instance construction, loss weights, and weighted Hamming loss."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from crftree.graphs import (LossWeights, as_labeling, build_instance,
                            class_frequency_weights, weighted_hamming_loss)


def _labeled(labels, num_classes):
    labels = np.asarray(labels)
    return build_instance(np.zeros((labels.size, 1)), [], truth=labels, num_classes=num_classes)


class TestBuildInstance:
    def test_minimal_chain(self):
        inst = build_instance([[0.0, 1.0], [1.0, 0.0], [2.0, 2.0]],
                              [(0, 1, [0.5]), (1, 2, [0.25])])
        assert inst.num_nodes == 3
        assert inst.num_edges == 2
        assert inst.node_features.shape == (3, 2)
        assert inst.edge_features.shape == (2, 1)

    def test_edges_stored_canonically(self):
        inst = build_instance(np.zeros((3, 1)), [(2, 0, [1.0]), (2, 1, [2.0])])
        assert inst.edges.tolist() == [[0, 2], [1, 2]]
        # feature rows follow input order even after endpoint normalization
        assert inst.edge_features[:, 0].tolist() == [1.0, 2.0]

    def test_self_loop_rejected(self):
        with pytest.raises(ValueError, match=r"edge 0: self-loop \(2, 2\)"):
            build_instance(np.zeros((3, 1)), [(2, 2, [1.0])])

    def test_duplicate_undirected_edge_rejected(self):
        with pytest.raises(ValueError, match=r"edge 1: duplicate undirected edge \(0, 1\)"):
            build_instance(np.zeros((2, 1)), [(0, 1, [1.0]), (1, 0, [1.0])])

    def test_out_of_range_index_rejected(self):
        with pytest.raises(ValueError, match="edge 0: node index out of range"):
            build_instance(np.zeros((2, 1)), [(0, 5, [1.0])])

    def test_edge_feature_width_mismatch_rejected(self):
        with pytest.raises(ValueError, match="edge 1: feature dimension 2 != 1"):
            build_instance(np.zeros((3, 1)), [(0, 1, [1.0]), (1, 2, [1.0, 2.0])])

    def test_non_finite_feature_rejected(self):
        with pytest.raises(ValueError, match="node 1: non-finite feature"):
            build_instance([[0.0], [np.nan]], [])

    def test_arrays_are_frozen(self):
        inst = build_instance(np.zeros((2, 1)), [(0, 1, [1.0])])
        with pytest.raises(ValueError):
            inst.node_features[0, 0] = 5.0


class TestLabeling:
    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="expected 3"):
            as_labeling([1, 2], 3, 2)

    def test_label_below_one(self):
        with pytest.raises(ValueError, match="below 1"):
            as_labeling([1, 0], 2, 2)

    def test_label_above_k(self):
        with pytest.raises(ValueError, match="above num_classes=2"):
            as_labeling([1, 3], 2, 2)

    def test_non_integer_rejected(self):
        with pytest.raises(ValueError, match="integers"):
            as_labeling([1.5, 2.0], 2, 2)


class TestLossWeights:
    def test_negative_entry_rejected(self):
        with pytest.raises(ValueError):
            LossWeights(np.array([1.0, -0.1]))

    def test_all_zero_rejected(self):
        with pytest.raises(ValueError):
            LossWeights(np.array([0.0, 0.0]))

    def test_uniform(self):
        lw = LossWeights.uniform(3)
        assert lw.per_class.tolist() == [1.0, 1.0, 1.0]
        assert lw.num_classes == 3


class TestClassFrequencyWeights:
    def test_balanced_split_gives_unit_weights(self):
        lw = class_frequency_weights([_labeled([1, 1, 2, 2], 2)], 2)
        assert lw.per_class.tolist() == [1.0, 1.0]

    def test_eighty_twenty_split(self):
        # oracle: 10 nodes, counts (8, 2) -> c_k = 10 / (2 * count_k) = (0.625, 2.5)
        lw = class_frequency_weights([_labeled([1] * 8 + [2] * 2, 2)], 2)
        assert lw.per_class.tolist() == [0.625, 2.5]

    def test_absent_class_rejected_by_name(self):
        with pytest.raises(ValueError, match="class 3"):
            class_frequency_weights([_labeled([1, 2, 1], 3)], 3)

    def test_counts_pool_across_instances(self):
        insts = [_labeled([1, 1, 1], 2), _labeled([2], 2)]
        lw = class_frequency_weights(insts, 2)
        # 4 nodes, counts (3, 1): c = (4/6, 4/2)
        assert np.allclose(lw.per_class, [4 / 6, 2.0], rtol=0, atol=1e-15)

    @given(st.lists(st.integers(min_value=1, max_value=4), min_size=4, max_size=40)
           .filter(lambda ls: set(ls) >= {1, 2, 3, 4}))
    def test_frequency_weighted_mean_is_one(self, labels):
        lw = class_frequency_weights([_labeled(labels, 4)], 4)
        freqs = np.bincount(labels, minlength=5)[1:] / len(labels)
        assert abs(float(freqs @ lw.per_class) - 1.0) <= 1e-12


class TestWeightedHammingLoss:
    def test_identity_is_zero(self):
        lw = LossWeights(np.array([0.7, 1.3]))
        y = np.array([1, 2, 2, 1])
        assert weighted_hamming_loss(y, y, lw) == 0.0

    def test_unit_weights_count_disagreements(self):
        lw = LossWeights.uniform(2)
        assert weighted_hamming_loss(np.array([1, 1, 2]), np.array([1, 2, 1]), lw) == 2.0

    def test_class_weighted_disagreements(self):
        # oracle: node costs c_truth = (0.5, 2), both nodes differ -> 2.5
        lw = LossWeights(np.array([0.5, 2.0]))
        assert weighted_hamming_loss(np.array([1, 2]), np.array([2, 1]), lw) == 2.5

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            weighted_hamming_loss(np.array([1, 2]), np.array([1]), LossWeights.uniform(2))

    @given(st.lists(st.integers(1, 3), min_size=1, max_size=12),
           st.lists(st.integers(1, 3), min_size=1, max_size=12))
    def test_positive_iff_different(self, a, b):
        n = min(len(a), len(b))
        t, p = np.array(a[:n]), np.array(b[:n])
        loss = weighted_hamming_loss(t, p, LossWeights.uniform(3))
        assert (loss == 0.0) == bool(np.array_equal(t, p))
        assert loss >= 0.0
