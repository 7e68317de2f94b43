"""Exact feature attribution for tree ensembles.

tree_shap_single implements the path-dependent algorithm: branch
probabilities come from training-sample covers, so no background dataset is
needed. brute_force_shapley evaluates the Shapley definition directly over
the subset lattice of the tree's used features and serves as the
verification oracle for the fast path.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path

import numpy as np

from ..dataset import Table
from ..errors import DataError, ModelError
from ..gbdt.boosting import Ensemble, model_matrix
from ..gbdt.trees import FlatTree, TreeNode, flatten_tree
from ._treeshap import tree_shap_batch


@dataclass
class ShapMatrix:
    """Per-row, per-feature attributions in target units."""

    values: np.ndarray  # (n_rows, n_features)
    base_value: float
    feature_names: list[str]


@dataclass(frozen=True)
class ImportanceRanking:
    """Features ordered by mean |attribution|, descending."""

    entries: tuple[tuple[str, float], ...]

    @property
    def names(self) -> list[str]:
        return [name for name, _ in self.entries]


def _check_covers(flat: FlatTree) -> None:
    if np.any(flat.cover <= 0):
        raise ModelError("tree has a zero-cover node; covers must come from training")


def expected_value(tree: TreeNode) -> float:
    """Cover-weighted mean of leaf values."""
    if tree.is_leaf:
        return tree.value
    wl = tree.left.cover / tree.cover
    return wl * expected_value(tree.left) + (1.0 - wl) * expected_value(tree.right)


def tree_shap_single(tree: TreeNode, x: np.ndarray) -> tuple[np.ndarray, float]:
    """Per-feature contributions and expected value for one tree and one row.

    x is a model-input row: numeric feature values, categorical level codes
    as floats. Returns (phi, expected) with expected + sum(phi) equal to the
    tree's output for x.
    """
    x = np.asarray(x, dtype=np.float64)
    flat = flatten_tree(tree)
    _check_covers(flat)
    used = flat.feature[flat.feature >= 0]
    if used.size and used.max() >= x.shape[0]:
        raise DataError("feature row is shorter than the tree's feature indices")
    phi = np.zeros((1, x.shape[0]), dtype=np.float64)
    tree_shap_batch(flat.feature, flat.threshold, flat.is_cat_split, flat.cat_pool,
                    flat.cat_off, flat.cat_len, flat.left, flat.right, flat.cover,
                    flat.value, flat.max_depth, x.reshape(1, -1), 1.0, phi)
    return phi[0], expected_value(tree)


def explain_ensemble(e: Ensemble, rows: Table) -> ShapMatrix:
    """Attributions for every row, on the ensemble's raw output scale.

    Per-tree contributions are summed and scaled by the learning rate;
    base_value + row sums reproduce the ensemble predictions.
    """
    X = model_matrix(e, rows)
    phi = np.zeros((rows.n_rows, len(e.feature_names)), dtype=np.float64)
    base = e.base_score
    for tree, flat in zip(e.trees, e.flats()):
        _check_covers(flat)
        tree_shap_batch(flat.feature, flat.threshold, flat.is_cat_split,
                        flat.cat_pool, flat.cat_off, flat.cat_len, flat.left,
                        flat.right, flat.cover, flat.value, flat.max_depth,
                        X, e.learning_rate, phi)
        base += e.learning_rate * expected_value(tree)
    return ShapMatrix(values=phi, base_value=base, feature_names=list(e.feature_names))


def _conditional_expectation(node: TreeNode, x: np.ndarray, fixed: frozenset[int]) -> float:
    """Descend following x on fixed features, cover-averaging over the rest."""
    if node.is_leaf:
        return node.value
    if node.feature in fixed:
        if node.left_levels is not None:
            go_left = int(x[node.feature]) in node.left_levels
        else:
            go_left = x[node.feature] <= node.threshold
        child = node.left if go_left else node.right
        return _conditional_expectation(child, x, fixed)
    wl = node.left.cover / node.cover
    return (wl * _conditional_expectation(node.left, x, fixed)
            + (1.0 - wl) * _conditional_expectation(node.right, x, fixed))


def tree_used_features(tree: TreeNode) -> list[int]:
    found: set[int] = set()

    def visit(node: TreeNode):
        if not node.is_leaf:
            found.add(node.feature)
            visit(node.left)
            visit(node.right)

    visit(tree)
    return sorted(found)


def brute_force_shapley(tree: TreeNode, x: np.ndarray, max_features: int = 12) -> np.ndarray:
    """Shapley values by direct subset enumeration (the verification oracle).

    For every subset S of the tree's used features, the payoff v(S) is the
    cover-weighted conditional expectation fixing S at x's values. Cost is
    exponential in the number of used features.
    """
    x = np.asarray(x, dtype=np.float64)
    used = tree_used_features(tree)
    d = len(used)
    if d > max_features:
        raise DataError(f"tree uses {d} features; brute force is capped at {max_features}")
    phi = np.zeros(x.shape[0], dtype=np.float64)
    if d == 0:
        return phi

    payoff: dict[frozenset[int], float] = {}
    for size in range(d + 1):
        for subset in combinations(used, size):
            s = frozenset(subset)
            payoff[s] = _conditional_expectation(tree, x, s)

    fact = [math.factorial(k) for k in range(d + 1)]
    for j in used:
        others = [f for f in used if f != j]
        total = 0.0
        for size in range(d):
            weight = fact[size] * fact[d - size - 1] / fact[d]
            for subset in combinations(others, size):
                s = frozenset(subset)
                total += weight * (payoff[s | {j}] - payoff[s])
        phi[j] = total
    return phi


def global_importance(m: ShapMatrix) -> ImportanceRanking:
    """Mean absolute attribution per feature, descending; name order on ties."""
    if m.values.size == 0:
        raise DataError("cannot rank an empty attribution matrix")
    scores = np.abs(m.values).mean(axis=0)
    order = sorted(range(len(m.feature_names)),
                   key=lambda j: (-scores[j], m.feature_names[j]))
    return ImportanceRanking(tuple((m.feature_names[j], float(scores[j]))
                                   for j in order))


# ---------------------------------------------------------------------------
# CSV export
# ---------------------------------------------------------------------------

def write_shap_csv(m: ShapMatrix, row_ids: np.ndarray, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["Id"] + m.feature_names + ["base_value"])
        for i in range(m.values.shape[0]):
            row = [repr(float(v)) for v in m.values[i]]
            writer.writerow([_id_str(row_ids[i])] + row + [repr(float(m.base_value))])


def write_ranking_csv(r: ImportanceRanking, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rank", "feature", "score"])
        for rank, (name, score) in enumerate(r.entries, start=1):
            writer.writerow([rank, name, repr(float(score))])


def _id_str(v) -> str:
    f = float(v)
    return str(int(f)) if f == int(f) else repr(f)
