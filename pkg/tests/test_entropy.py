import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_entropy, common_refinement, partition_of, random_tree
from phylospst import (
    Alphabet,
    DistanceMatrix,
    SparseContextTree,
    beta_distance,
    beta_entropy,
    distance_matrix,
    root_tree,
    tree_join,
)

H1_THREE_LEAF = -(3 / 8 * math.log2(3 / 8) + 1 / 8 * math.log2(1 / 8) + 1 / 2 * math.log2(1 / 2))


class TestEntropy:
    @pytest.mark.parametrize("beta", [0.3, 0.5, 1.0, 2.0, 3.5])
    def test_root_tree_is_zero(self, abcd, beta):
        assert beta_entropy(root_tree(abcd), beta) == 0.0

    def test_three_leaf_shannon(self, three_leaf):
        oracle = brute_entropy(partition_of(three_leaf, 2), 1)
        assert oracle == pytest.approx(1.405639, abs=1e-6)
        assert beta_entropy(three_leaf, 1) == pytest.approx(oracle, abs=1e-12)
        assert beta_entropy(three_leaf, 1) == pytest.approx(H1_THREE_LEAF, abs=1e-15)

    def test_three_leaf_beta_two(self, three_leaf):
        assert brute_entropy(partition_of(three_leaf, 2), 2) == pytest.approx(19 / 16, abs=1e-12)
        assert beta_entropy(three_leaf, 2) == pytest.approx(1.1875, abs=1e-12)

    @pytest.mark.parametrize("beta", [0, -1, float("nan"), float("inf")])
    def test_bad_beta(self, three_leaf, beta):
        with pytest.raises(ValueError):
            beta_entropy(three_leaf, beta)

    def test_incomplete_without_completion(self, abcd):
        half = SparseContextTree.from_strings(abcd, ["ab"])
        with pytest.raises(ValueError):
            beta_entropy(half, 1, auto_complete=False)
        # completion adds the complementary block {c, d}
        assert beta_entropy(half, 1) == pytest.approx(1.0)


class TestDistance:
    def test_self_distance(self, three_leaf):
        for beta in (0.5, 1, 2):
            assert beta_distance(three_leaf, three_leaf, beta) == 0.0

    def test_three_leaf_vs_tree_b(self, three_leaf, tree_b):
        depth = 2
        p, q = partition_of(three_leaf, depth), partition_of(tree_b, depth)
        h_join = brute_entropy(common_refinement(p, q), 1)
        assert h_join == pytest.approx(2.405639, abs=1e-6)
        assert brute_entropy(q, 1) == pytest.approx(1.0)
        expected = 2 * h_join - brute_entropy(p, 1) - brute_entropy(q, 1)
        assert expected == pytest.approx(2.405639, abs=1e-6)
        assert beta_distance(three_leaf, tree_b, 1) == pytest.approx(expected, abs=1e-12)
        assert beta_distance(tree_b, three_leaf, 1) == beta_distance(three_leaf, tree_b, 1)

    def test_mismatch(self, three_leaf):
        with pytest.raises(ValueError):
            beta_distance(three_leaf, root_tree(Alphabet("ab")))


class TestDistanceMatrix:
    def test_single(self, three_leaf):
        m = distance_matrix([("x", three_leaf)])
        assert m.values.tolist() == [[0.0]]

    def test_duplicates_at_zero(self, three_leaf, tree_b):
        m = distance_matrix([("a1", three_leaf), ("a2", three_leaf), ("b", tree_b)])
        d = beta_distance(three_leaf, tree_b)
        assert m["a1", "a2"] == 0.0
        assert m["a1", "b"] == m["a2", "b"] == d

    def test_pair(self, three_leaf, tree_b):
        m = distance_matrix([("A", three_leaf), ("B", tree_b)], beta=1)
        np.testing.assert_allclose(m.values, [[0, 2.405639], [2.405639, 0]], atol=1e-6)

    def test_errors(self, three_leaf):
        with pytest.raises(ValueError):
            distance_matrix([])
        with pytest.raises(ValueError):
            distance_matrix([("x", three_leaf), ("x", three_leaf)])

    def test_matrix_validation(self):
        with pytest.raises(ValueError):
            DistanceMatrix(("a", "b"), [[0, 1], [2, 0]])
        with pytest.raises(ValueError):
            DistanceMatrix(("a", "b"), [[0, -1], [-1, 0]])


seeds = st.integers(0, 2**32 - 1)


def _trees(seed, count):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(2, 6))
    depth = int(rng.integers(1, 4))
    return [random_tree(rng, k, depth) for _ in range(count)]


@settings(max_examples=80, deadline=None)
@given(seeds, st.sampled_from([1.0, 1.5, 2.0, 3.0]))
def test_metric_axioms(seed, beta):
    t, s, r = _trees(seed, 3)
    d_ts, d_sr, d_tr = beta_distance(t, s, beta), beta_distance(s, r, beta), beta_distance(t, r, beta)
    assert min(d_ts, d_sr, d_tr) >= 0
    assert d_ts == beta_distance(s, t, beta)
    assert (d_ts == 0) == (t == s)
    assert d_tr <= d_ts + d_sr + 1e-9


def test_triangle_inequality_fails_below_one():
    # split on the last symbol, no split, split on the symbol before it
    ab = Alphabet("ab")
    t = SparseContextTree.from_strings(ab, ["a", "b"])
    s = root_tree(ab)
    r = SparseContextTree.from_strings(ab, ["a|ab", "b|ab"])
    for beta in (1.0, 2.0):
        assert beta_distance(t, r, beta) <= beta_distance(t, s, beta) + beta_distance(s, r, beta)
    assert beta_distance(t, s, 0.5) == pytest.approx(1.0)
    assert beta_distance(s, r, 0.5) == pytest.approx(1.0)
    assert beta_distance(t, r, 0.5) == pytest.approx(2 * math.sqrt(2))


@settings(max_examples=80, deadline=None)
@given(seeds, st.sampled_from([0.5, 1.0, 2.0, 3.0]))
def test_join_does_not_lower_entropy(seed, beta):
    t, s = _trees(seed, 2)
    h = beta_entropy(tree_join(t, s), beta)
    assert h >= max(beta_entropy(t, beta), beta_entropy(s, beta)) - 1e-12


@settings(max_examples=60, deadline=None)
@given(seeds, st.sampled_from([1e-6, -1e-6]))
def test_continuity_at_shannon(seed, eps):
    (t,) = _trees(seed, 1)
    assert abs(beta_entropy(t, 1 + eps) - beta_entropy(t, 1)) <= 1e-4


@settings(max_examples=60, deadline=None)
@given(seeds, st.sampled_from([0.5, 1.0, 2.0, 3.0]))
def test_closed_form_matches_partition_oracle(seed, beta):
    (t,) = _trees(seed, 1)
    assert beta_entropy(t, beta) == pytest.approx(brute_entropy(partition_of(t, t.max_depth), beta), abs=1e-10)
