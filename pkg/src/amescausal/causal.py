"""Per-feature causal effect estimation and downstream decision tools.

Effects come from cross-fitted double machine learning on the partially
linear model: boosted-tree nuisance regressions E[Y|X] and E[T|X] are fit
out-of-fold, and the effect is the no-intercept regression of outcome
residuals on treatment residuals with a heteroskedasticity-robust standard
error. Heterogeneity and policy trees are fit on doubly-robust per-row
pseudo-outcomes whose mean reproduces the DML point estimate.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import NUMERIC, Table
from .errors import DataError
from .gbdt.boosting import Ensemble, fit, predict
from .gbdt.trees import GrowthStrategy, LevelWise
from .gbdt.tuning import kfold_indices

#: Fixed nuisance-model configuration: a small level-wise ensemble.
DEFAULT_NUISANCE = (LevelWise(depth=3, l2_leaf_reg=1.0, border_count=32), 0.1, 200)


@dataclass(frozen=True)
class NuisanceSpec:
    strategy: GrowthStrategy = DEFAULT_NUISANCE[0]
    learning_rate: float = DEFAULT_NUISANCE[1]
    n_trees: int = DEFAULT_NUISANCE[2]


@dataclass(frozen=True)
class TreatmentSpec:
    """One treatment column: binary {0,1}, continuous, or categorical with a
    baseline level (default: the most frequent level)."""

    feature: str
    kind: str  # binary | continuous | categorical
    baseline: str | None = None

    def __post_init__(self):
        if self.kind not in ("binary", "continuous", "categorical"):
            raise DataError(f"unknown treatment kind {self.kind!r}")


@dataclass(frozen=True)
class CausalEffect:
    feature: str
    contrast: str  # e.g. "TwnhsV1Fam", "1v0", or "num"
    ate: float
    stderr: float
    p_value: float


@dataclass
class CrossfitResiduals:
    """Out-of-fold residuals: no row's model ever saw that row's outcome."""

    y_res: np.ndarray
    t_res: np.ndarray
    fold_of: np.ndarray  # fold index per row
    rows: np.ndarray     # row indices of the source table these refer to


def _normal_p_value(z: float) -> float:
    return math.erfc(abs(z) / math.sqrt(2.0))


def treatment_spec_for(data: Table, feature: str, baseline: str | None = None) -> TreatmentSpec:
    """Infer a TreatmentSpec from the column's kind and levels."""
    col = data.column(feature)
    if col.kind == NUMERIC:
        values = np.unique(data.numeric[feature])
        if values.size == 2 and set(values.tolist()) <= {0.0, 1.0}:
            return TreatmentSpec(feature, "binary")
        return TreatmentSpec(feature, "continuous")
    levels = data.levels[feature]
    present = np.bincount(data.categorical[feature], minlength=len(levels))
    named = {levels[i] for i in np.flatnonzero(present)}
    if named <= {"0", "1"} or named <= {"NA", "0", "1"} and named >= {"0", "1"}:
        return TreatmentSpec(feature, "binary")
    if baseline is None:
        baseline = levels[int(np.argmax(present))]
    return TreatmentSpec(feature, "categorical", baseline=baseline)


def _binary_values(data: Table, feature: str) -> np.ndarray:
    col = data.column(feature)
    if col.kind == NUMERIC:
        vals = data.numeric[feature]
        if not set(np.unique(vals).tolist()) <= {0.0, 1.0}:
            raise DataError(f"binary treatment {feature!r} takes values outside {{0,1}}")
        return vals.astype(np.float64)
    one = data.levels[feature].index("1") if "1" in data.levels[feature] else None
    if one is None:
        raise DataError(f"binary treatment {feature!r} has no level '1'")
    return (data.categorical[feature] == one).astype(np.float64)


def _contrasts(data: Table, spec: TreatmentSpec):
    """Yield (contrast label, row indices, treatment vector on those rows)."""
    n = data.n_rows
    everything = np.arange(n)
    if spec.kind == "continuous":
        vals = data.numeric[spec.feature].astype(np.float64)
        yield "num", everything, vals
        return
    if spec.kind == "binary":
        yield "1v0", everything, _binary_values(data, spec.feature)
        return
    levels = data.levels[spec.feature]
    codes = data.categorical[spec.feature]
    counts = np.bincount(codes, minlength=len(levels))
    baseline = spec.baseline
    if baseline is None:
        baseline = levels[int(np.argmax(counts))]
    if baseline not in levels:
        raise DataError(f"baseline level {baseline!r} not found in {spec.feature!r}")
    base_code = levels.index(baseline)
    if counts[base_code] == 0:
        raise DataError(f"baseline level {baseline!r} has no rows")
    for code, level in enumerate(levels):
        if code == base_code or counts[code] < 2:
            continue
        rows = np.flatnonzero((codes == code) | (codes == base_code))
        t = (codes[rows] == code).astype(np.float64)
        yield f"{level}v{baseline}", rows, t


def crossfit_residuals(data: Table, treatment_feature: str, t_values: np.ndarray,
                       rows: np.ndarray, folds: int = 5, seed: int = 0,
                       nuisance: NuisanceSpec | None = None) -> CrossfitResiduals:
    """Out-of-fold residuals of outcome and treatment given the confounders.

    Confounders are every feature except the treatment column. Each fold's
    residuals come from nuisance models fit on the complement of that fold.
    """
    nuisance = nuisance or NuisanceSpec()
    sub = data.take(rows)
    if np.unique(t_values).size < 2:
        raise DataError(f"treatment {treatment_feature!r} is constant in the data")
    y_table = sub.drop_columns([treatment_feature])
    t_table = sub.with_new_target("__treatment__", t_values, drop=(treatment_feature,))

    n = sub.n_rows
    y_res = np.empty(n, dtype=np.float64)
    t_res = np.empty(n, dtype=np.float64)
    fold_of = np.empty(n, dtype=np.int64)
    y = sub.target
    for k, fold in enumerate(kfold_indices(n, folds, seed)):
        mask = np.ones(n, dtype=bool)
        mask[fold] = False
        train_rows = np.flatnonzero(mask)
        y_model = fit(y_table.take(train_rows), nuisance.strategy,
                      learning_rate=nuisance.learning_rate,
                      n_trees=nuisance.n_trees, seed=seed)
        t_model = fit(t_table.take(train_rows), nuisance.strategy,
                      learning_rate=nuisance.learning_rate,
                      n_trees=nuisance.n_trees, seed=seed)
        held_y = y_table.take(fold)
        held_t = t_table.take(fold)
        y_res[fold] = y[fold] - predict(y_model, held_y)
        t_res[fold] = t_values[fold] - predict(t_model, held_t)
        fold_of[fold] = k
    return CrossfitResiduals(y_res=y_res, t_res=t_res, fold_of=fold_of, rows=rows)


def _final_stage(res: CrossfitResiduals) -> tuple[float, float, float]:
    t_res = res.t_res
    y_res = res.y_res
    denom = float(np.sum(t_res * t_res))
    if denom <= 1e-10 * t_res.size:
        raise DataError("treatment residuals have near-zero variance; "
                        "the treatment is fully explained by the confounders")
    ate = float(np.sum(t_res * y_res)) / denom
    u = y_res - ate * t_res
    se = math.sqrt(float(np.sum(t_res * t_res * u * u))) / denom
    if se == 0.0:
        p = 0.0 if ate != 0.0 else 1.0
    else:
        p = _normal_p_value(ate / se)
    return ate, se, p


def dml_effect(data: Table, treatment: TreatmentSpec, outcome: str | None = None,
               folds: int = 5, seed: int = 0,
               nuisance: NuisanceSpec | None = None) -> list[CausalEffect]:
    """Cross-fitted DML effect per contrast of one treatment feature.

    Categorical treatments expand into one contrast per non-baseline level,
    each estimated on the two-arm subset (level vs baseline rows).
    """
    if not data.has_column(treatment.feature):
        raise DataError(f"treatment column {treatment.feature!r} not found")
    if folds < 2:
        raise DataError(f"folds must be >= 2, got {folds}")
    if outcome is not None and outcome != data.target_name:
        data = data.replace_target(outcome)
    out = []
    for label, rows, t in _contrasts(data, treatment):
        res = crossfit_residuals(data, treatment.feature, t, rows, folds=folds,
                                 seed=seed, nuisance=nuisance)
        ate, se, p = _final_stage(res)
        out.append(CausalEffect(feature=treatment.feature, contrast=label,
                                ate=ate, stderr=se, p_value=p))
    if not out:
        raise DataError(f"treatment {treatment.feature!r} yields no estimable contrast")
    return out


def significance_table(effects: list[CausalEffect]) -> list[CausalEffect]:
    """Effects ordered by ascending p-value (ties: |ate| descending, then
    feature and contrast names)."""
    if not effects:
        raise DataError("no effects to rank")
    return sorted(effects, key=lambda e: (e.p_value, -abs(e.ate), e.feature, e.contrast))


def causal_feature_order(effects: list[CausalEffect]) -> list[str]:
    """Feature-level causal ranking: each feature at its best contrast."""
    ordered = significance_table(effects)
    seen = set()
    out = []
    for e in ordered:
        if e.feature not in seen:
            seen.add(e.feature)
            out.append(e.feature)
    return out


def pseudo_outcomes(data: Table, treatment: TreatmentSpec, outcome: str | None = None,
                    folds: int = 5, seed: int = 0,
                    nuisance: NuisanceSpec | None = None,
                    residuals: CrossfitResiduals | None = None) -> np.ndarray:
    """Doubly-robust per-row effect scores for a binary treatment.

    psi_i = (t_res_i * y_res_i) / mean(t_res^2), so mean(psi) equals the DML
    point estimate computed from the same residuals.
    """
    if treatment.kind != "binary":
        raise DataError("pseudo-outcomes require a binary treatment")
    if residuals is None:
        if outcome is not None and outcome != data.target_name:
            data = data.replace_target(outcome)
        t = _binary_values(data, treatment.feature)
        residuals = crossfit_residuals(data, treatment.feature, t,
                                       np.arange(data.n_rows), folds=folds,
                                       seed=seed, nuisance=nuisance)
    t_res = residuals.t_res
    denom = float(np.mean(t_res * t_res))
    if denom <= 1e-10:
        raise DataError("treatment residuals have near-zero variance")
    return (t_res * residuals.y_res) / denom


# ---------------------------------------------------------------------------
# Heterogeneity and policy trees
# ---------------------------------------------------------------------------

@dataclass
class EffectNode:
    """Shared node shape for CATE and policy trees."""

    n: int
    mean: float                     # mean psi (CATE) or mean net effect (policy)
    total: float
    feature: str | None = None
    kind: str | None = None         # numeric | categorical
    threshold: float | None = None  # numeric split: x <= threshold goes left
    level: str | None = None        # categorical split: x == level goes left
    left: "EffectNode | None" = None
    right: "EffectNode | None" = None
    action: str | None = None       # policy leaves: treat | no-treat

    @property
    def is_leaf(self) -> bool:
        return self.feature is None

    def condition(self, side: str) -> str:
        if self.kind == "numeric":
            op = "<=" if side == "left" else ">"
            return f"{self.feature} {op} {self.threshold:g}"
        op = "==" if side == "left" else "!="
        return f"{self.feature} {op} {self.level}"


@dataclass
class CateTree:
    root: EffectNode

    def to_dict(self) -> dict:
        return _node_dict(self.root)

    def to_text(self) -> str:
        return "\n".join(_node_lines(self.root, "all rows", "mean_effect"))


@dataclass
class PolicyTree:
    root: EffectNode
    treatment_cost: float

    def net_benefit(self) -> float:
        """Total training net benefit of treating exactly the treat leaves."""
        total = 0.0
        stack = [self.root]
        while stack:
            node = stack.pop()
            if node.is_leaf:
                if node.action == "treat":
                    total += node.total
            else:
                stack.append(node.left)
                stack.append(node.right)
        return total

    def to_dict(self) -> dict:
        d = _node_dict(self.root)
        return {"treatment_cost": self.treatment_cost, "net_benefit": self.net_benefit(),
                "tree": d}

    def to_text(self) -> str:
        lines = [f"treatment cost per unit: {self.treatment_cost:g}",
                 f"training net benefit: {self.net_benefit():.3f}"]
        lines += _node_lines(self.root, "all rows", "mean_net_effect")
        return "\n".join(lines)


def _node_dict(node: EffectNode) -> dict:
    d = {"n": node.n, "mean": node.mean}
    if node.action is not None:
        d["action"] = node.action
    if not node.is_leaf:
        d["split"] = node.condition("left")
        d["left"] = _node_dict(node.left)
        d["right"] = _node_dict(node.right)
    return d


def _node_lines(node: EffectNode, label: str, mean_name: str, indent: int = 0) -> list[str]:
    pad = "  " * indent
    suffix = f" -> {node.action}" if node.action else ""
    lines = [f"{pad}{label}: n={node.n}, {mean_name}={node.mean:.3f}{suffix}"]
    if not node.is_leaf:
        lines += _node_lines(node.left, node.condition("left"), mean_name, indent + 1)
        lines += _node_lines(node.right, node.condition("right"), mean_name, indent + 1)
    return lines


def _covariate_columns(x: Table) -> list[tuple[str, str]]:
    return [(c.name, c.kind) for c in x.schema if c.role == "feature"]


def _split_candidates(x: Table, name: str, kind: str, rows: np.ndarray,
                      values: np.ndarray, min_leaf: int,
                      score):
    """Best (score_gain, descriptor, left_rows) for one covariate, or None.

    `score(left_sums, left_counts)` maps candidate left partitions (vectors)
    to objective values; larger is better. Sums/counts are of `values`.
    """
    if kind == NUMERIC:
        v = x.numeric[name][rows]
        order = np.argsort(v, kind="stable")
        sv = v[order]
        cs = np.cumsum(values[rows][order])
        boundary = np.flatnonzero(sv[1:] != sv[:-1])  # left block = 0..b
        if boundary.size == 0:
            return None
        n_left = boundary + 1
        ok = (n_left >= min_leaf) & (rows.size - n_left >= min_leaf)
        if not ok.any():
            return None
        n_left = n_left[ok]
        boundary = boundary[ok]
        gains = score(cs[boundary], n_left)
        k = int(np.argmax(gains))
        thr = 0.5 * (sv[boundary[k]] + sv[boundary[k] + 1])
        left_rows = rows[v <= thr]
        return float(gains[k]), ("numeric", thr, None), left_rows
    codes = x.categorical[name][rows]
    n_levels = len(x.levels[name])
    sums = np.bincount(codes, weights=values[rows], minlength=n_levels)
    counts = np.bincount(codes, minlength=n_levels)
    ok = (counts >= min_leaf) & (rows.size - counts >= min_leaf) & (counts > 0)
    cand = np.flatnonzero(ok)
    if cand.size == 0:
        return None
    gains = score(sums[cand], counts[cand])
    k = int(np.argmax(gains))
    level_code = int(cand[k])
    left_rows = rows[codes == level_code]
    return float(gains[k]), ("categorical", None, x.levels[name][level_code]), left_rows


def _grow_effect_tree(values: np.ndarray, x: Table, rows: np.ndarray,
                      max_depth: int, min_leaf: int, objective: str) -> EffectNode:
    total = float(values[rows].sum())
    n = int(rows.size)
    node = EffectNode(n=n, mean=total / n, total=total)

    if objective == "variance":
        parent_score = total * total / n

        def score(left_sums, left_counts):
            right_sums = total - left_sums
            right_counts = n - left_counts
            return (left_sums ** 2 / left_counts + right_sums ** 2 / right_counts
                    - parent_score)
    else:  # net-benefit objective for policy trees
        parent_score = max(total, 0.0)

        def score(left_sums, left_counts):
            right_sums = total - left_sums
            return (np.maximum(left_sums, 0.0) + np.maximum(right_sums, 0.0)
                    - parent_score)

    if max_depth >= 1 and n >= 2 * min_leaf:
        best = None
        for name, kind in _covariate_columns(x):
            found = _split_candidates(x, name, kind, rows, values, min_leaf, score)
            if found is None:
                continue
            gain, descriptor, left_rows = found
            if gain > 1e-12 * (1.0 + abs(parent_score)) and (best is None or gain > best[0]):
                best = (gain, name, descriptor, left_rows)
        if best is not None:
            _, name, (kind, thr, level), left_rows = best
            in_left = np.zeros(x.n_rows, dtype=bool)
            in_left[left_rows] = True
            right_rows = rows[~in_left[rows]]
            node.feature = name
            node.kind = kind
            node.threshold = thr
            node.level = level
            node.left = _grow_effect_tree(values, x, left_rows, max_depth - 1,
                                          min_leaf, objective)
            node.right = _grow_effect_tree(values, x, right_rows, max_depth - 1,
                                           min_leaf, objective)
    return node


def fit_cate_tree(psi: np.ndarray, x: Table, max_depth: int, min_leaf: int) -> CateTree:
    """Variance-reduction regression tree over the pseudo-outcomes."""
    psi = np.asarray(psi, dtype=np.float64)
    if psi.size == 0:
        raise DataError("no pseudo-outcomes to fit")
    if psi.size != x.n_rows:
        raise DataError("pseudo-outcome vector and covariate table disagree on rows")
    if max_depth < 1:
        raise DataError(f"max_depth must be >= 1, got {max_depth}")
    root = _grow_effect_tree(psi, x, np.arange(x.n_rows), max_depth,
                             max(1, min_leaf), "variance")
    return CateTree(root=root)


def _assign_actions(node: EffectNode) -> None:
    if node.is_leaf:
        node.action = "treat" if node.total > 0.0 else "no-treat"
    else:
        _assign_actions(node.left)
        _assign_actions(node.right)


def fit_policy_tree(psi: np.ndarray, x: Table, treatment_cost: float,
                    max_depth: int, min_leaf: int = 1) -> PolicyTree:
    """Greedy tree maximizing total net benefit of treated leaves.

    Each leaf treats exactly when its mean effect exceeds the per-unit cost,
    so the fitted policy always does at least as well on the training data
    as treating everyone or no one.
    """
    psi = np.asarray(psi, dtype=np.float64)
    if psi.size == 0:
        raise DataError("no pseudo-outcomes to fit")
    if psi.size != x.n_rows:
        raise DataError("pseudo-outcome vector and covariate table disagree on rows")
    if treatment_cost < 0:
        raise DataError(f"treatment cost must be nonnegative, got {treatment_cost}")
    if max_depth < 1:
        raise DataError(f"max_depth must be >= 1, got {max_depth}")
    net = psi - treatment_cost
    root = _grow_effect_tree(net, x, np.arange(x.n_rows), max_depth,
                             max(1, min_leaf), "net")
    _assign_actions(root)
    return PolicyTree(root=root, treatment_cost=float(treatment_cost))


# ---------------------------------------------------------------------------
# What-if simulation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WhatIfResult:
    feature: str
    value: str
    baseline_mean: float
    counterfactual_mean: float
    n_affected: int


def whatif(e: Ensemble, rows: Table, feature: str, value) -> WhatIfResult:
    """Predicted-mean shift from setting `feature` to `value` where it differs.

    Rows already at the intervention value are untouched; both means are
    over the full input set.
    """
    col = rows.column(feature)
    if col.kind == NUMERIC:
        affected = rows.numeric[feature] != float(value)
    else:
        if str(value) not in rows.levels[feature]:
            raise DataError(f"{value!r} is not a level of column {feature!r}")
        affected = rows.level_strings(feature) != str(value)
    idx = np.flatnonzero(affected)
    baseline = float(predict(e, rows).mean())
    if idx.size == 0:
        return WhatIfResult(feature, str(value), baseline, baseline, 0)
    modified = rows.set_values(feature, idx, value)
    counterfactual = float(predict(e, modified).mean())
    return WhatIfResult(feature, str(value), baseline, counterfactual, int(idx.size))


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------

def write_effects_csv(effects: list[CausalEffect], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["feature", "contrast", "ate", "stderr", "p_value"])
        for e in effects:
            writer.writerow([e.feature, e.contrast, repr(e.ate), repr(e.stderr),
                             repr(e.p_value)])
