"""Independent oracle implementations the fast paths are checked against.

These deliberately share no code with the package: Shapley values by
permutation enumeration, rank correlation by scanning the two lists, split
gain from raw per-child sums, and a random-tree generator with consistent
covers.
"""

import math
from itertools import permutations

import numpy as np

from amescausal.gbdt.trees import TreeNode


def descend_expectation(node, x, fixed):
    """Cover-weighted conditional expectation fixing the features in `fixed`."""
    if node.is_leaf:
        return node.value
    if node.feature in fixed:
        if node.left_levels is not None:
            go_left = int(x[node.feature]) in node.left_levels
        else:
            go_left = x[node.feature] <= node.threshold
        return descend_expectation(node.left if go_left else node.right, x, fixed)
    wl = node.left.cover / node.cover
    return (wl * descend_expectation(node.left, x, fixed)
            + (1 - wl) * descend_expectation(node.right, x, fixed))


def permutation_shapley(tree, x):
    """Shapley values by enumerating orderings of the tree's used features."""
    used = set()

    def collect(node):
        if not node.is_leaf:
            used.add(node.feature)
            collect(node.left)
            collect(node.right)

    collect(tree)
    used = sorted(used)
    phi = np.zeros(len(x))
    if not used:
        return phi
    orderings = list(permutations(used))
    for order in orderings:
        fixed = frozenset()
        prev = descend_expectation(tree, x, fixed)
        for f in order:
            fixed = fixed | {f}
            cur = descend_expectation(tree, x, fixed)
            phi[f] += cur - prev
            prev = cur
    return phi / len(orderings)


def random_cover_tree(rng, n_features=5, max_leaves=16, max_depth=6, cat_prob=0.3):
    """Random binary tree with positive integer covers summing up the tree.

    Features may repeat along a path (exercising the path-unwind logic) and
    splits may be categorical level sets.
    """
    def build(depth, budget):
        if budget[0] <= 1 or depth >= max_depth or rng.random() < 0.25:
            return TreeNode(cover=float(rng.integers(1, 50)),
                            value=float(rng.normal() * 10))
        budget[0] -= 1
        f = int(rng.integers(n_features))
        if rng.random() < cat_prob:
            levels = tuple(sorted(set(rng.integers(0, 6, size=rng.integers(1, 3)).tolist())))
            node = TreeNode(cover=0.0, feature=f, left_levels=levels)
        else:
            node = TreeNode(cover=0.0, feature=f, threshold=float(rng.normal()))
        node.left = build(depth + 1, budget)
        node.right = build(depth + 1, budget)
        node.cover = node.left.cover + node.right.cover
        return node

    return build(0, [max_leaves])


def random_feature_row(rng, n_features=5):
    """Row mixing categorical-style codes and continuous values."""
    x = rng.normal(size=n_features)
    codes = rng.integers(0, 6, size=n_features).astype(float)
    pick = rng.random(n_features) < 0.4
    return np.where(pick, codes, x)


def naive_spearman(list_a, list_b):
    """rho for two strictly ordered feature lists, by scanning positions."""
    common = [f for f in list_a if f in list_b]
    pos_a = sorted(common, key=lambda f: list_a.index(f))
    pos_b = sorted(common, key=lambda f: list_b.index(f))
    rank_a = {f: i + 1 for i, f in enumerate(pos_a)}
    rank_b = {f: i + 1 for i, f in enumerate(pos_b)}
    n = len(common)
    d2 = sum((rank_a[f] - rank_b[f]) ** 2 for f in common)
    return 1.0 - 6.0 * d2 / (n * (n * n - 1))


def raw_split_gain(g_left, h_left, g_right, h_right, lam):
    g = g_left + g_right
    h = h_left + h_right
    return (g_left ** 2 / (h_left + lam) + g_right ** 2 / (h_right + lam)
            - g ** 2 / (h + lam))


def concordance_spearman(r_a, r_b):
    """Spearman rho via the Pearson correlation of the rank vectors."""
    a = np.asarray(r_a, dtype=float)
    b = np.asarray(r_b, dtype=float)
    a = a - a.mean()
    b = b - b.mean()
    return float(np.dot(a, b) / math.sqrt(np.dot(a, a) * np.dot(b, b)))
