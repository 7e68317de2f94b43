"""Tree growth: structure, gain bookkeeping, and the greedy-choice oracle."""

import numpy as np
import pytest

from amescausal.gbdt import (LeafWise, LevelWise, build_design, grow_tree,
                             node_histograms, find_best_split)

from oracles import raw_split_gain


def design_from_matrix(X, border_count=255):
    cols = [(f"x{j}", False, X[:, j]) for j in range(X.shape[1])]
    return build_design(cols, border_count)


def tree_rows(design, root):
    """Row sets per node by replaying split predicates on the raw matrix."""
    out = {}

    def visit(node, rows):
        out[id(node)] = rows
        if node.is_leaf:
            return
        x = design.X[rows, node.feature]
        if node.left_levels is not None:
            left = np.isin(x.astype(int), list(node.left_levels))
        else:
            left = x <= node.threshold
        visit(node.left, rows[left])
        visit(node.right, rows[~left])

    visit(root, np.arange(design.n_rows))
    return out


class TestGrowBasics:
    def test_zero_residual_gives_single_zero_leaf(self):
        X = np.random.default_rng(0).normal(size=(32, 3))
        g = np.zeros(32)
        tree = grow_tree(design_from_matrix(X), g, np.ones(32), LeafWise(8, 1, 4))
        assert tree.is_leaf
        assert tree.value == 0.0

    def test_levelwise_depth_structure(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(200, 4))
        g = rng.normal(size=200)
        tree = grow_tree(design_from_matrix(X), g, np.ones(200), LevelWise(2, 1.0, 64))
        assert tree.depth() <= 2
        # all depth-1 nodes were expanded before depth 2: any leaf above the
        # bottom must have had no positive-gain split, not a skipped level
        assert not tree.is_leaf
        assert tree.left.depth() <= 1 and tree.right.depth() <= 1

    def test_leafwise_respects_num_leaves_and_min_child(self):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(300, 5))
        g = rng.normal(size=300)
        strategy = LeafWise(num_leaves=6, min_child_samples=25, max_depth=8)
        design = design_from_matrix(X)
        tree = grow_tree(design, g, np.ones(300), strategy)
        leaves = tree.leaves()
        assert 1 < len(leaves) <= 6
        for leaf in leaves:
            assert leaf.cover >= 25

    def test_cover_bookkeeping(self):
        rng = np.random.default_rng(3)
        X = rng.normal(size=(256, 4))
        g = rng.normal(size=256)
        for strategy in (LeafWise(16, 5, 6), LevelWise(4, 2.0, 64)):
            tree = grow_tree(design_from_matrix(X), g, np.ones(256), strategy)

            def check(node):
                if not node.is_leaf:
                    assert node.cover == node.left.cover + node.right.cover
                    check(node.left)
                    check(node.right)

            check(tree)

    def test_leaf_values_are_regularized_means(self):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(128, 3))
        g = rng.normal(size=128)
        lam = 3.0
        design = design_from_matrix(X, 64)
        tree = grow_tree(design, g, np.ones(128), LevelWise(3, lam, 64))
        rows = tree_rows(design, tree)
        for leaf in tree.leaves():
            r = rows[id(leaf)]
            assert leaf.value == pytest.approx(-g[r].sum() / (r.size + lam), rel=1e-12)

    def test_recorded_gains_match_raw_recomputation(self):
        rng = np.random.default_rng(5)
        X = rng.normal(size=(400, 6))
        g = rng.normal(size=400)
        for strategy, lam in ((LeafWise(16, 10, 6), 0.0), (LevelWise(5, 2.5, 128), 2.5)):
            design = design_from_matrix(X)
            tree = grow_tree(design, g, np.ones(400), strategy)
            rows = tree_rows(design, tree)

            def check(node):
                if node.is_leaf:
                    return
                rl = rows[id(node.left)]
                rr = rows[id(node.right)]
                raw = raw_split_gain(g[rl].sum(), float(rl.size),
                                     g[rr].sum(), float(rr.size), lam)
                assert node.gain == pytest.approx(raw, rel=1e-9)
                check(node.left)
                check(node.right)

            check(tree)

    def test_grow_agrees_with_reference_split_search(self):
        rng = np.random.default_rng(6)
        X = rng.normal(size=(150, 4))
        g = rng.normal(size=150)
        design = design_from_matrix(X, 64)
        tree = grow_tree(design, g, np.ones(150), LeafWise(2, 5, 4))
        stats = node_histograms(design, g, np.ones(150), np.arange(150))
        ref = find_best_split(stats, l2=0.0, min_child_samples=5)
        assert tree.feature == design.feature_names.index(ref.feature)
        assert tree.threshold == pytest.approx(ref.threshold)
        assert tree.gain == pytest.approx(ref.gain, rel=1e-9)


class TestGreedyChoiceOracle:
    """Leaf-wise growth vs exhaustive enumeration of candidate splits."""

    @staticmethod
    def best_raw_split(X, g, rows):
        best = None
        for j in range(X.shape[1]):
            values = np.unique(X[rows, j])
            for a, b in zip(values[:-1], values[1:]):
                thr = (a + b) / 2.0
                left = rows[X[rows, j] <= thr]
                right = rows[X[rows, j] > thr]
                gain = raw_split_gain(g[left].sum(), float(left.size),
                                      g[right].sum(), float(right.size), 0.0)
                if best is None or gain > best[0] + 1e-12:
                    best = (gain, j, thr, left, right)
        return best

    @pytest.mark.parametrize("seed", range(12))
    def test_three_leaf_tree_matches_enumeration(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(8, 17))
        X = rng.normal(size=(n, 3))
        g = rng.normal(size=n)
        design = design_from_matrix(X)
        tree = grow_tree(design, g, np.ones(n), LeafWise(3, 1, 8))

        rows = np.arange(n)
        root_best = self.best_raw_split(X, g, rows)
        assert tree.feature == root_best[1]
        assert tree.gain == pytest.approx(root_best[0], rel=1e-9)
        left_rows, right_rows = root_best[3], root_best[4]

        # second split goes to the child whose own best gain is larger
        left_best = self.best_raw_split(X, g, left_rows) if left_rows.size >= 2 else None
        right_best = self.best_raw_split(X, g, right_rows) if right_rows.size >= 2 else None
        candidates = [c for c in (left_best, right_best) if c is not None and c[0] > 0]
        if not candidates:
            assert tree.left.is_leaf and tree.right.is_leaf
            return
        expect_left = (left_best is not None and
                       (right_best is None or left_best[0] >= right_best[0]) and
                       left_best[0] > 0)
        split_child = tree.left if not tree.left.is_leaf else tree.right
        assert (split_child is tree.left) == expect_left
        expected = left_best if expect_left else right_best
        assert split_child.feature == expected[1]
        assert split_child.gain == pytest.approx(expected[0], rel=1e-9)
