"""Exhaustive grid search with k-fold cross-validation."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from ..dataset import Table
from ..errors import ConfigError, DataError
from .boosting import fit, predict
from .metrics import r2_score
from .trees import GrowthStrategy, LeafWise, LevelWise


@dataclass(frozen=True)
class GridSearchSpec:
    """Hyperparameter grids for one model family.

    The leaf-wise family derives num_leaves as 2^depth for each depth, so
    its shape grid is the list of (max_depth, 2^max_depth) pairs rather than
    a full cross product.
    """

    family: str  # leafwise | levelwise
    learning_rate: tuple[float, ...]
    max_depth: tuple[int, ...]
    min_child_samples: tuple[int, ...] = ()
    l2_leaf_reg: tuple[float, ...] = ()
    border_count: tuple[int, ...] = ()
    folds: int = 5
    scoring: str = "r2"
    n_trees: int = 500

    def __post_init__(self):
        if self.family not in ("leafwise", "levelwise"):
            raise ConfigError(f"unknown model family {self.family!r}")
        if self.folds < 2:
            raise ConfigError(f"folds must be >= 2, got {self.folds}")
        if self.scoring != "r2":
            raise ConfigError(f"unsupported scoring {self.scoring!r}")
        required = (("learning_rate", "max_depth", "min_child_samples")
                    if self.family == "leafwise"
                    else ("learning_rate", "max_depth", "l2_leaf_reg", "border_count"))
        for name in required:
            if not getattr(self, name):
                raise ConfigError(f"grid for {name!r} must be non-empty")

    def configs(self) -> list[tuple[GrowthStrategy, float]]:
        """Cartesian product in declaration order (ties favor earlier entries)."""
        out: list[tuple[GrowthStrategy, float]] = []
        if self.family == "leafwise":
            for lr, depth, mcs in itertools.product(self.learning_rate,
                                                    self.max_depth,
                                                    self.min_child_samples):
                out.append((LeafWise(num_leaves=2 ** depth, min_child_samples=mcs,
                                     max_depth=depth), lr))
        else:
            for lr, depth, l2, bc in itertools.product(self.learning_rate,
                                                       self.max_depth,
                                                       self.l2_leaf_reg,
                                                       self.border_count):
                out.append((LevelWise(depth=depth, l2_leaf_reg=l2,
                                      border_count=bc), lr))
        return out


def default_grid_spec(family: str, folds: int = 5, n_trees: int = 500) -> GridSearchSpec:
    """The standard tuning grids for each family."""
    if family == "leafwise":
        return GridSearchSpec(
            family="leafwise",
            learning_rate=(0.1, 0.05, 0.01),
            max_depth=(3, 5, 10),
            min_child_samples=(20, 30, 40),
            folds=folds,
            n_trees=n_trees,
        )
    return GridSearchSpec(
        family="levelwise",
        learning_rate=(0.1, 0.05, 0.01),
        max_depth=(3, 5, 10),
        l2_leaf_reg=(1.0, 5.0, 10.0),
        border_count=(32, 128, 255),
        folds=folds,
        n_trees=n_trees,
    )


def kfold_indices(n_rows: int, folds: int, seed: int) -> list[np.ndarray]:
    """Seeded disjoint fold index arrays covering all rows."""
    if folds < 2 or folds > n_rows:
        raise DataError(f"cannot make {folds} folds from {n_rows} rows")
    order = np.random.default_rng(seed).permutation(n_rows)
    return [np.sort(chunk) for chunk in np.array_split(order, folds)]


@dataclass
class GridSearchResult:
    best_strategy: GrowthStrategy
    best_learning_rate: float
    best_score: float
    table: list[dict] = field(default_factory=list)  # one row per config


def _strategy_params(strategy: GrowthStrategy, lr: float) -> dict:
    if isinstance(strategy, LeafWise):
        return {"learning_rate": lr, "max_depth": strategy.max_depth,
                "num_leaves": strategy.num_leaves,
                "min_child_samples": strategy.min_child_samples}
    return {"learning_rate": lr, "depth": strategy.depth,
            "l2_leaf_reg": strategy.l2_leaf_reg,
            "border_count": strategy.border_count}


def cross_val_score(train: Table, strategy: GrowthStrategy, learning_rate: float,
                    n_trees: int, folds: list[np.ndarray], seed: int = 0) -> list[float]:
    """Held-out R^2 per fold for one configuration."""
    all_rows = np.arange(train.n_rows)
    scores = []
    for fold in folds:
        mask = np.ones(train.n_rows, dtype=bool)
        mask[fold] = False
        fit_rows = all_rows[mask]
        model = fit(train.take(fit_rows), strategy, learning_rate=learning_rate,
                    n_trees=n_trees, seed=seed)
        held = train.take(fold)
        scores.append(r2_score(predict(model, held), held.target))
    return scores


def grid_search(train: Table, spec: GridSearchSpec, seed: int = 0) -> GridSearchResult:
    """Exhaustive search; best config by mean CV R^2, first-in-grid on ties."""
    configs = spec.configs()
    if not configs:
        raise ConfigError("empty hyperparameter grid")
    folds = kfold_indices(train.n_rows, spec.folds, seed)
    best = None
    table = []
    for strategy, lr in configs:
        scores = cross_val_score(train, strategy, lr, spec.n_trees, folds, seed=seed)
        mean = float(np.mean(scores))
        table.append({"params": _strategy_params(strategy, lr),
                      "fold_scores": [float(s) for s in scores],
                      "mean_r2": mean})
        if best is None or mean > best[0]:
            best = (mean, strategy, lr)
    return GridSearchResult(best_strategy=best[1], best_learning_rate=best[2],
                            best_score=best[0], table=table)
