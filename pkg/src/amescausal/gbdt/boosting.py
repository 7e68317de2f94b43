"""Gradient boosting over binned regression trees.

Squared-error loss throughout: gradient = prediction - target, hessian = 1.
Predictions follow base_score + learning_rate * sum of leaf values, i.e.
trees store unshrunk leaf values and shrinkage is applied at evaluation
time (the same convention the SHAP explainer uses to scale per-tree
contributions).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..dataset import CATEGORICAL, NUMERIC, Table
from ..errors import DataError, ModelError
from . import _kernels
from .binning import DEFAULT_MAX_BINS, BinnedDesign, build_design
from .encoding import TargetEncoder, fit_target_encoder, ordered_target_encode
from .metrics import rmse
from .sampling import goss_sample
from .trees import (FlatTree, GrowthStrategy, LeafWise, LevelWise, TreeNode,
                    flatten_tree, grow_tree)

ORDERED_PRIOR_WEIGHT = 1.0


@dataclass
class Ensemble:
    """A fitted boosted-tree model. Immutable after fit."""

    trees: list[TreeNode]
    base_score: float
    learning_rate: float
    strategy: GrowthStrategy
    feature_names: list[str]
    feature_kinds: list[str]  # numeric | categorical, aligned with feature_names
    levels: dict[str, list[str]]  # training level dictionaries
    encoders: dict[str, TargetEncoder] = field(default_factory=dict)
    train_rmse: list[float] = field(default_factory=list)
    _flats: list[FlatTree] | None = field(default=None, repr=False, compare=False)

    @property
    def family(self) -> str:
        return "leafwise" if isinstance(self.strategy, LeafWise) else "levelwise"

    def flats(self) -> list[FlatTree]:
        if self._flats is None or len(self._flats) != len(self.trees):
            self._flats = [flatten_tree(t) for t in self.trees]
        return self._flats


def _feature_columns(t: Table) -> list[tuple[str, str]]:
    return [(c.name, c.kind) for c in t.schema if c.role == "feature"]


def _training_design(t: Table, strategy: GrowthStrategy, seed: int) -> tuple[BinnedDesign, dict[str, TargetEncoder]]:
    y = t.target
    cols: list[tuple[str, bool, np.ndarray]] = []
    encoders: dict[str, TargetEncoder] = {}
    if isinstance(strategy, LeafWise):
        for name, kind in _feature_columns(t):
            if kind == NUMERIC:
                cols.append((name, False, t.numeric[name]))
            else:
                cols.append((name, True, t.categorical[name]))
        design = build_design(cols, DEFAULT_MAX_BINS)
    else:
        permutation = np.random.default_rng(seed).permutation(t.n_rows)
        for name, kind in _feature_columns(t):
            if kind == NUMERIC:
                cols.append((name, False, t.numeric[name]))
            else:
                codes = t.categorical[name]
                encoded = ordered_target_encode(codes, y, permutation,
                                                ORDERED_PRIOR_WEIGHT)
                encoders[name] = fit_target_encoder(codes, len(t.levels[name]), y,
                                                    ORDERED_PRIOR_WEIGHT)
                cols.append((name, False, encoded))
        design = build_design(cols, strategy.border_count)
    return design, encoders


def _recompute_covers(flat: FlatTree, leaf_idx: np.ndarray) -> None:
    """Replace covers with full-training-set traversal counts."""
    counts = np.bincount(leaf_idx, minlength=flat.feature.shape[0]).astype(np.float64)
    cover = counts
    for i in range(flat.feature.shape[0] - 1, -1, -1):
        if flat.feature[i] >= 0:
            cover[i] = cover[flat.left[i]] + cover[flat.right[i]]
    flat.cover[:] = cover
    for node, cv in zip(flat.nodes, cover):
        node.cover = float(cv)


def fit(train: Table, strategy: GrowthStrategy, learning_rate: float = 0.1,
        n_trees: int = 500, goss: tuple[float, float] | None = None,
        seed: int = 0) -> Ensemble:
    """Fit a boosted ensemble on the table's target column.

    Categorical features enter leaf-wise trees directly (one-vs-rest level
    splits) and level-wise trees through ordered target encoding with a
    single seeded permutation. When goss = (top_rate, other_rate) is given,
    each round grows its tree on a gradient-based one-side sample.
    """
    if n_trees < 1:
        raise DataError(f"n_trees must be >= 1, got {n_trees}")
    if not 0.0 < learning_rate <= 1.0:
        raise DataError(f"learning_rate must be in (0, 1], got {learning_rate}")
    y = np.asarray(train.target, dtype=np.float64)
    if y.size == 0:
        raise DataError("training table is empty")
    if not np.isfinite(y).all():
        raise DataError("target column contains non-finite values")

    design, encoders = _training_design(train, strategy, seed)
    n = design.n_rows
    base = float(y.mean())
    pred = np.full(n, base, dtype=np.float64)
    ones = np.ones(n, dtype=np.float64)
    rng = np.random.default_rng(seed)

    trees: list[TreeNode] = []
    flats: list[FlatTree] = []
    losses: list[float] = []
    leaf_idx = np.empty(n, dtype=np.int64)
    for _ in range(n_trees):
        g = pred - y
        if goss is not None:
            round_seed = int(rng.integers(0, 2**63 - 1))
            idx, w = goss_sample(g, goss[0], goss[1], round_seed)
            g_eff = np.zeros(n, dtype=np.float64)
            h_eff = np.zeros(n, dtype=np.float64)
            g_eff[idx] = g[idx] * w
            h_eff[idx] = w
            tree = grow_tree(design, g_eff, h_eff, strategy, rows=idx)
        else:
            tree = grow_tree(design, g, ones, strategy)
        flat = flatten_tree(tree)
        _kernels.assign_leaves(design.X, flat.feature, flat.threshold,
                               flat.is_cat_split, flat.cat_pool, flat.cat_off,
                               flat.cat_len, flat.left, flat.right, leaf_idx)
        _recompute_covers(flat, leaf_idx)
        pred += learning_rate * flat.value[leaf_idx]
        losses.append(rmse(pred, y))
        trees.append(tree)
        flats.append(flat)

    return Ensemble(
        trees=trees,
        base_score=base,
        learning_rate=learning_rate,
        strategy=strategy,
        feature_names=[name for name, _ in _feature_columns(train)],
        feature_kinds=[kind for _, kind in _feature_columns(train)],
        levels={name: list(train.levels[name]) for name, kind in _feature_columns(train)
                if kind == CATEGORICAL},
        encoders=encoders,
        train_rmse=losses,
        _flats=flats,
    )


def model_matrix(e: Ensemble, rows: Table) -> np.ndarray:
    """Rows mapped into the ensemble's model-input space.

    Numeric features pass through; categorical level strings are remapped
    into the training level dictionary (unseen levels become "NA") and, for
    the level-wise family, replaced by their encoded target statistic.
    """
    n = rows.n_rows
    X = np.empty((n, len(e.feature_names)), dtype=np.float64)
    for j, (name, kind) in enumerate(zip(e.feature_names, e.feature_kinds)):
        if not rows.has_column(name):
            raise ModelError(f"input table is missing model feature {name!r}")
        if kind == NUMERIC:
            if rows.column(name).kind != NUMERIC:
                raise ModelError(f"feature {name!r} must be numeric")
            X[:, j] = rows.numeric[name]
        else:
            if rows.column(name).kind != CATEGORICAL:
                raise ModelError(f"feature {name!r} must be categorical")
            train_index = {lv: i for i, lv in enumerate(e.levels[name])}
            lut = np.array([train_index.get(lv, 0) for lv in rows.levels[name]],
                           dtype=np.int64)
            mapped = lut[rows.categorical[name]]
            if name in e.encoders:
                X[:, j] = e.encoders[name].encode(mapped)
            else:
                X[:, j] = mapped.astype(np.float64)
    return X


def predict(e: Ensemble, rows: Table) -> np.ndarray:
    """Deterministic batch prediction in target units."""
    X = model_matrix(e, rows)
    out = np.full(rows.n_rows, e.base_score, dtype=np.float64)
    for flat in e.flats():
        _kernels.add_leaf_values(X, flat.feature, flat.threshold, flat.is_cat_split,
                                 flat.cat_pool, flat.cat_off, flat.cat_len,
                                 flat.left, flat.right, flat.value,
                                 e.learning_rate, out)
    return out


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def _tree_to_list(root: TreeNode) -> list[dict]:
    flat = flatten_tree(root)
    out = []
    for i, node in enumerate(flat.nodes):
        if node.is_leaf:
            out.append({"kind": "leaf", "value": node.value, "cover": node.cover})
        else:
            rec = {
                "kind": "split",
                "feature": node.feature,
                "left": int(flat.left[i]),
                "right": int(flat.right[i]),
                "cover": node.cover,
                "gain": node.gain,
            }
            if node.left_levels is not None:
                rec["left_levels"] = list(node.left_levels)
            else:
                rec["threshold"] = node.threshold
            out.append(rec)
    return out


def _tree_from_list(records: list[dict]) -> TreeNode:
    nodes = []
    for rec in records:
        if rec["kind"] == "leaf":
            nodes.append(TreeNode(cover=rec["cover"], value=rec["value"]))
        else:
            nodes.append(TreeNode(
                cover=rec["cover"],
                feature=rec["feature"],
                threshold=rec.get("threshold"),
                left_levels=tuple(rec["left_levels"]) if "left_levels" in rec else None,
                gain=rec.get("gain", 0.0),
            ))
    for rec, node in zip(records, nodes):
        if rec["kind"] == "split":
            node.left = nodes[rec["left"]]
            node.right = nodes[rec["right"]]
    return nodes[0]


def to_dict(e: Ensemble) -> dict:
    if isinstance(e.strategy, LeafWise):
        strategy = {"num_leaves": e.strategy.num_leaves,
                    "min_child_samples": e.strategy.min_child_samples,
                    "max_depth": e.strategy.max_depth}
    else:
        strategy = {"depth": e.strategy.depth,
                    "l2_leaf_reg": e.strategy.l2_leaf_reg,
                    "border_count": e.strategy.border_count}
    return {
        "format": "amescausal-model",
        "version": 1,
        "family": e.family,
        "strategy": strategy,
        "base_score": e.base_score,
        "learning_rate": e.learning_rate,
        "feature_names": list(e.feature_names),
        "feature_kinds": list(e.feature_kinds),
        "levels": {k: list(v) for k, v in e.levels.items()},
        "encoders": {k: {"values": enc.values.tolist(), "prior": enc.prior}
                     for k, enc in e.encoders.items()},
        "train_rmse": list(e.train_rmse),
        "trees": [_tree_to_list(t) for t in e.trees],
    }


def from_dict(d: dict) -> Ensemble:
    if d.get("format") != "amescausal-model":
        raise ModelError("not a model file")
    if d["family"] == "leafwise":
        strategy: GrowthStrategy = LeafWise(**d["strategy"])
    else:
        strategy = LevelWise(**d["strategy"])
    return Ensemble(
        trees=[_tree_from_list(t) for t in d["trees"]],
        base_score=d["base_score"],
        learning_rate=d["learning_rate"],
        strategy=strategy,
        feature_names=list(d["feature_names"]),
        feature_kinds=list(d["feature_kinds"]),
        levels={k: list(v) for k, v in d["levels"].items()},
        encoders={k: TargetEncoder(values=np.asarray(v["values"], dtype=np.float64),
                                   prior=v["prior"])
                  for k, v in d["encoders"].items()},
        train_rmse=list(d["train_rmse"]),
    )


def save_model(e: Ensemble, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(to_dict(e), fh)


def load_model(path: str | Path) -> Ensemble:
    p = Path(path)
    if not p.exists():
        raise ModelError(f"model file not found: {p}")
    with open(p, encoding="utf-8") as fh:
        return from_dict(json.load(fh))
