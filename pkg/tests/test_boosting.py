"""Boosting loop, prediction, and model serialization."""

import json

import numpy as np
import pytest

from amescausal.errors import DataError, ModelError
from amescausal.gbdt import (Ensemble, LeafWise, LevelWise, fit, from_dict,
                             load_model, model_matrix, predict, r2_score,
                             save_model, to_dict)
from amescausal.gbdt.trees import flatten_tree
from amescausal.gbdt import _kernels

from conftest import numeric_table


def small_table(seed=0, n=200, p=4):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, p))
    y = 3.0 * X[:, 0] - 2.0 * X[:, 1] + 0.5 * rng.normal(size=n)
    cols = {f"x{j}": X[:, j] for j in range(p)}
    cols["y"] = y
    return numeric_table(cols, target="y")


def manual_predict_row(model, table, i):
    """Independent traversal of every tree for one row."""
    X = model_matrix(model, table)
    total = model.base_score
    for tree in model.trees:
        node = tree
        while not node.is_leaf:
            x = X[i, node.feature]
            if node.left_levels is not None:
                node = node.left if int(x) in node.left_levels else node.right
            else:
                node = node.left if x <= node.threshold else node.right
        total += model.learning_rate * node.value
    return total


class TestFit:
    def test_rejects_zero_trees(self):
        with pytest.raises(DataError):
            fit(small_table(), LeafWise(8, 5, 3), n_trees=0)

    def test_rejects_non_finite_targets(self):
        t = small_table()
        t.numeric["y"][3] = np.nan
        with pytest.raises(DataError, match="non-finite"):
            fit(t, LeafWise(8, 5, 3), n_trees=1)

    def test_single_full_tree_predicts_leaf_means(self):
        t = small_table(n=64)
        model = fit(t, LeafWise(num_leaves=64, min_child_samples=4, max_depth=10),
                    learning_rate=1.0, n_trees=1)
        flat = flatten_tree(model.trees[0])
        X = model_matrix(model, t)
        leaf = np.empty(t.n_rows, dtype=np.int64)
        _kernels.assign_leaves(X, flat.feature, flat.threshold, flat.is_cat_split,
                               flat.cat_pool, flat.cat_off, flat.cat_len,
                               flat.left, flat.right, leaf)
        pred = predict(model, t)
        y = t.target
        for node in np.unique(leaf):
            members = leaf == node
            assert pred[members][0] == pytest.approx(y[members].mean(), rel=1e-9)

    def test_training_loss_non_increasing(self, split_pair):
        for strategy in (LeafWise(16, 10, 5), LevelWise(4, 1.0, 64)):
            model = fit(split_pair.train, strategy, learning_rate=0.2, n_trees=40, seed=1)
            losses = np.array(model.train_rmse)
            assert (np.diff(losses) <= 1e-9).all()

    def test_goss_fit_runs_and_predicts(self, split_pair):
        model = fit(split_pair.train, LeafWise(16, 10, 5), learning_rate=0.1,
                    n_trees=30, goss=(0.2, 0.1), seed=3)
        r2 = r2_score(predict(model, split_pair.test), split_pair.test.target)
        assert r2 > 0.5
        for tree in model.trees:
            def check(node):
                if not node.is_leaf:
                    assert node.cover == node.left.cover + node.right.cover
                    check(node.left)
                    check(node.right)
            check(tree)

    def test_shrinkage_linearity(self):
        t = small_table(seed=5)
        model = fit(t, LeafWise(8, 5, 3), learning_rate=0.3, n_trees=10)
        scaled = Ensemble(
            trees=[_scale_tree(tree, 0.3) for tree in model.trees],
            base_score=model.base_score,
            learning_rate=1.0,
            strategy=model.strategy,
            feature_names=model.feature_names,
            feature_kinds=model.feature_kinds,
            levels=model.levels,
            encoders=model.encoders,
        )
        assert np.array_equal(predict(model, t), predict(scaled, t))


def _scale_tree(node, factor):
    from amescausal.gbdt.trees import TreeNode
    if node.is_leaf:
        return TreeNode(cover=node.cover, value=factor * node.value)
    return TreeNode(cover=node.cover, feature=node.feature, threshold=node.threshold,
                    left_levels=node.left_levels, gain=node.gain,
                    left=_scale_tree(node.left, factor),
                    right=_scale_tree(node.right, factor))


class TestPredict:
    def test_empty_ensemble_returns_base_score(self):
        t = small_table(n=10)
        model = Ensemble(trees=[], base_score=7.5, learning_rate=0.1,
                         strategy=LeafWise(8, 5, 3),
                         feature_names=[f"x{j}" for j in range(4)],
                         feature_kinds=["numeric"] * 4, levels={})
        assert (predict(model, t) == 7.5).all()

    def test_one_tree_matches_manual_traversal(self):
        t = small_table(seed=7, n=50)
        model = fit(t, LeafWise(8, 3, 4), learning_rate=0.4, n_trees=1)
        for i in (0, 17, 49):
            assert predict(model, t)[i] == pytest.approx(manual_predict_row(model, t, i),
                                                         rel=1e-12)

    def test_batch_equals_row_by_row(self, split_pair, leafwise_model):
        test = split_pair.test
        batch = predict(leafwise_model, test)
        for i in (0, 31, 115):
            single = predict(leafwise_model, test.take(np.array([i])))
            assert single[0] == batch[i]

    def test_missing_feature_column_raises(self, split_pair, leafwise_model):
        broken = split_pair.test.drop_columns(["GrLivArea"])
        with pytest.raises(ModelError, match="GrLivArea"):
            predict(leafwise_model, broken)

    def test_unseen_level_maps_to_na(self, split_pair, leafwise_model):
        test = split_pair.test.take(np.arange(5))
        test.levels["Neighborhood"] = list(test.levels["Neighborhood"]) + ["Atlantis"]
        test.categorical["Neighborhood"][:] = len(test.levels["Neighborhood"]) - 1
        na_version = split_pair.test.take(np.arange(5))
        na_version.categorical["Neighborhood"][:] = 0  # the NA level
        assert np.array_equal(predict(leafwise_model, test),
                              predict(leafwise_model, na_version))


class TestMetrics:
    def test_perfect_prediction(self):
        y = np.array([1.0, 2.0, 3.0])
        assert r2_score(y, y) == 1.0

    def test_mean_prediction_scores_zero(self):
        y = np.array([1.0, 2.0, 3.0, 10.0])
        assert r2_score(np.full(4, y.mean()), y) == pytest.approx(0.0, abs=1e-12)

    def test_constant_actual_rejected(self):
        with pytest.raises(DataError):
            r2_score(np.array([1.0, 2.0]), np.array([3.0, 3.0]))


class TestSerialization:
    @pytest.mark.parametrize("family", ["leafwise", "levelwise"])
    def test_round_trip_bit_exact(self, split_pair, leafwise_model, levelwise_model,
                                  family, tmp_path):
        model = leafwise_model if family == "leafwise" else levelwise_model
        path = tmp_path / "model.json"
        save_model(model, path)
        back = load_model(path)
        assert np.array_equal(predict(back, split_pair.test),
                              predict(model, split_pair.test))
        assert back.base_score == model.base_score
        assert back.train_rmse == model.train_rmse
        for a, b in zip(model.trees, back.trees):
            assert a == b  # recursive dataclass equality on all node fields
        for name, enc in model.encoders.items():
            assert np.array_equal(back.encoders[name].values, enc.values)

    def test_dict_survives_json_text(self, leafwise_model):
        text = json.dumps(to_dict(leafwise_model))
        back = from_dict(json.loads(text))
        assert back.trees[0] == leafwise_model.trees[0]

    def test_rejects_foreign_payload(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"format": "something-else"}', encoding="utf-8")
        with pytest.raises(ModelError):
            load_model(path)

    def test_missing_model_file(self, tmp_path):
        with pytest.raises(ModelError, match="not found"):
            load_model(tmp_path / "absent.json")
