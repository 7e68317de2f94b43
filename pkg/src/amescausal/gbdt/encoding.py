"""Ordered target statistics for categorical columns.

Training rows are encoded with running per-category target statistics taken
strictly from rows earlier in a permutation, so a row's own target never
leaks into its encoding. Inference uses the full-data statistics table.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DataError


def ordered_target_encode(codes: np.ndarray, target: np.ndarray,
                          permutation: np.ndarray,
                          prior_weight: float = 1.0) -> np.ndarray:
    """Encode category codes against targets of earlier rows only.

    encoded(i) = (sum of targets of same-category rows that precede i in the
    permutation + prior_weight * mean(target)) / (count preceding +
    prior_weight). The first occurrence of any category encodes to the pure
    prior.
    """
    codes = np.asarray(codes)
    target = np.asarray(target, dtype=np.float64)
    permutation = np.asarray(permutation)
    n = codes.shape[0]
    if target.shape[0] != n or permutation.shape[0] != n:
        raise DataError("codes, target, and permutation must have equal length")
    if np.sort(permutation).tolist() != list(range(n)):
        raise DataError("permutation must be a bijection over row indices")
    if prior_weight < 0:
        raise DataError("prior_weight must be nonnegative")

    prior = float(target.mean()) if n else 0.0
    # position of each row within the permutation
    pos = np.empty(n, dtype=np.int64)
    pos[permutation] = np.arange(n)

    # group rows by category, ordered by permutation position, then take
    # shifted prefix sums within each group
    order = np.lexsort((pos, codes))
    sorted_codes = codes[order]
    sorted_t = target[order]
    group_start = np.empty(n, dtype=bool)
    if n:
        group_start[0] = True
        group_start[1:] = sorted_codes[1:] != sorted_codes[:-1]
    csum = np.cumsum(sorted_t)
    prefix = np.empty(n, dtype=np.float64)
    prefix[0] = 0.0
    prefix[1:] = csum[:-1]
    # index of each row's group start, propagated forward
    base = np.maximum.accumulate(np.where(group_start, np.arange(n), -1))
    within_sum = prefix - prefix[base]
    within_cnt = np.arange(n) - base

    encoded_sorted = (within_sum + prior_weight * prior) / (within_cnt + prior_weight) \
        if prior_weight > 0 else np.where(
            within_cnt > 0, within_sum / np.maximum(within_cnt, 1), prior)
    out = np.empty(n, dtype=np.float64)
    out[order] = encoded_sorted
    return out


@dataclass(frozen=True)
class TargetEncoder:
    """Full-data per-level target statistics, used at prediction time."""

    values: np.ndarray  # (n_levels,) encoded value per level code
    prior: float

    def encode(self, codes: np.ndarray) -> np.ndarray:
        codes = np.asarray(codes)
        out = np.full(codes.shape, self.prior, dtype=np.float64)
        known = codes < self.values.shape[0]
        out[known] = self.values[codes[known]]
        return out


def fit_target_encoder(codes: np.ndarray, n_levels: int, target: np.ndarray,
                       prior_weight: float = 1.0) -> TargetEncoder:
    target = np.asarray(target, dtype=np.float64)
    prior = float(target.mean()) if target.size else 0.0
    sums = np.bincount(codes, weights=target, minlength=n_levels)
    counts = np.bincount(codes, minlength=n_levels).astype(np.float64)
    values = (sums + prior_weight * prior) / (counts + prior_weight)
    if prior_weight == 0:
        empty = counts == 0
        values[empty] = prior
    return TargetEncoder(values=values, prior=prior)
