"""Quantile binning of numeric features and binned design matrices."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..dataset import NUMERIC, Table
from ..errors import DataError

#: Bin budget used by the leaf-wise family (its strategy carries no
#: border_count parameter).
DEFAULT_MAX_BINS = 255


def quantile_cuts(values: np.ndarray, border_count: int) -> np.ndarray:
    """Interior cut points giving at most border_count quantile bins.

    When the column has no more distinct values than the budget, cuts sit at
    midpoints between consecutive distinct values (one bin per value).
    Duplicate quantiles collapse, so heavily tied columns get fewer bins; a
    constant column gets no cuts at all (a single bin).
    """
    if border_count < 2:
        raise DataError(f"border_count must be >= 2, got {border_count}")
    v = np.asarray(values, dtype=np.float64)
    v = v[~np.isnan(v)]
    if v.size == 0:
        raise DataError("cannot bin an empty column")
    distinct = np.unique(v)
    if distinct.size <= 1:
        return np.empty(0, dtype=np.float64)
    if distinct.size <= border_count:
        return (distinct[:-1] + distinct[1:]) / 2.0
    qs = np.quantile(v, np.arange(1, border_count) / border_count)
    cuts = np.unique(qs)
    return cuts[cuts < distinct[-1]]


def bin_features(t: Table, border_count: int,
                 features: list[str] | None = None) -> dict[str, np.ndarray]:
    """Per-feature bin edges (interior cuts) for the numeric feature columns."""
    if features is None:
        features = [c.name for c in t.schema
                    if c.role == "feature" and c.kind == NUMERIC]
    out = {}
    for name in features:
        if t.column(name).kind != NUMERIC:
            raise DataError(f"column {name!r} is not numeric")
        out[name] = quantile_cuts(t.numeric[name], border_count)
    return out


def codes_from_cuts(values: np.ndarray, cuts: np.ndarray) -> np.ndarray:
    """Bin index per value: bin b holds cuts[b-1] < x <= cuts[b]."""
    return np.searchsorted(cuts, values, side="left").astype(np.uint16)


@dataclass
class BinnedDesign:
    """Feature matrix prepared for histogram tree growth.

    codes holds per-feature bin indices (numeric) or level codes
    (categorical). X holds the raw model-input values used for tree
    traversal: numeric feature values, or level codes as floats.
    cuts[j] maps a numeric feature's bin index to its real upper edge.
    """

    feature_names: list[str]
    is_cat: np.ndarray  # (p,) bool
    n_bins: np.ndarray  # (p,) int64
    codes: np.ndarray   # (n, p) uint16, C-contiguous
    X: np.ndarray       # (n, p) float64
    cuts: list[np.ndarray | None]

    @property
    def n_rows(self) -> int:
        return self.codes.shape[0]

    @property
    def n_features(self) -> int:
        return self.codes.shape[1]

    def threshold_for(self, feature: int, bin_index: int) -> float:
        cuts = self.cuts[feature]
        if cuts is None:
            raise DataError("categorical feature has no numeric threshold")
        return float(cuts[bin_index])


def build_design(columns: list[tuple[str, bool, np.ndarray]],
                 border_count: int) -> BinnedDesign:
    """Assemble a BinnedDesign from (name, is_categorical, values) columns.

    Categorical columns pass level codes and are used as-is (their bin count
    is the level count); numeric columns are quantile-binned.
    """
    names = [c[0] for c in columns]
    p = len(columns)
    n = len(columns[0][2]) if p else 0
    is_cat = np.zeros(p, dtype=np.bool_)
    n_bins = np.zeros(p, dtype=np.int64)
    codes = np.empty((n, p), dtype=np.uint16)
    X = np.empty((n, p), dtype=np.float64)
    cuts: list[np.ndarray | None] = []
    for j, (name, cat, values) in enumerate(columns):
        if cat:
            lv_codes = np.asarray(values)
            is_cat[j] = True
            n_bins[j] = int(lv_codes.max()) + 1 if lv_codes.size else 1
            codes[:, j] = lv_codes.astype(np.uint16)
            X[:, j] = lv_codes.astype(np.float64)
            cuts.append(None)
        else:
            vals = np.asarray(values, dtype=np.float64)
            if np.isnan(vals).any():
                raise DataError(f"numeric column {name!r} has missing values; clean first")
            c = quantile_cuts(vals, border_count)
            n_bins[j] = c.size + 1
            codes[:, j] = codes_from_cuts(vals, c)
            X[:, j] = vals
            cuts.append(c)
    return BinnedDesign(names, is_cat, n_bins, np.ascontiguousarray(codes), X, cuts)
