"""Gradient-based one-side sampling (GOSS)."""

from __future__ import annotations

import numpy as np

from ..errors import DataError


def goss_sample(gradients: np.ndarray, top_rate: float, other_rate: float,
                seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Keep all large-gradient rows, subsample the rest with amplification.

    The ceil(top_rate * n) rows with largest |gradient| are kept at weight 1.
    ceil(other_rate * n) of the remaining rows are sampled uniformly without
    replacement at weight (1 - top_rate) / other_rate, so the expected
    weighted gradient mass of the tail is preserved. Returns (row indices,
    weights), sorted by row index.
    """
    g = np.asarray(gradients, dtype=np.float64)
    if g.size == 0:
        raise DataError("cannot sample from an empty gradient vector")
    if not (0.0 < top_rate <= 1.0) or other_rate < 0.0:
        raise DataError(f"invalid GOSS rates a={top_rate}, b={other_rate}")
    if top_rate + other_rate > 1.0 + 1e-12:
        raise DataError(f"GOSS rates must satisfy a + b <= 1, got {top_rate} + {other_rate}")

    n = g.size
    n_top = min(n, int(np.ceil(top_rate * n)))
    order = np.argsort(-np.abs(g), kind="stable")
    top = order[:n_top]
    rest = order[n_top:]

    n_other = min(rest.size, int(np.ceil(other_rate * n)))
    if n_other > 0:
        rng = np.random.default_rng(seed)
        sampled = rng.choice(rest, size=n_other, replace=False)
        amplification = (1.0 - top_rate) / other_rate
        idx = np.concatenate([top, sampled])
        w = np.concatenate([np.ones(n_top), np.full(n_other, amplification)])
    else:
        idx = top
        w = np.ones(n_top)

    sort = np.argsort(idx)
    return idx[sort].astype(np.int64), w[sort]
