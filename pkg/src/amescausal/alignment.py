"""Rank alignment between attribution importance and causal significance."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DataError


@dataclass(frozen=True)
class AlignmentResult:
    """Intersection of two feature orderings with their Spearman coefficient.

    common is ordered by position in the attribution list; r_causal and
    r_shap are the densely re-ranked positions (1..n) of each common feature
    in the causal and attribution orders, and d their differences.
    """

    common: tuple[str, ...]
    r_causal: tuple[int, ...]
    r_shap: tuple[int, ...]
    d: tuple[int, ...]
    n: int
    rho: float

    def to_dict(self) -> dict:
        return {
            "common_features": list(self.common),
            "causal_ranks": list(self.r_causal),
            "shap_ranks": list(self.r_shap),
            "rank_differences": list(self.d),
            "n_common": self.n,
            "spearman_rho": self.rho,
        }


def _check_duplicate_free(name: str, items: list[str]) -> None:
    if len(set(items)) != len(items):
        dupes = sorted({x for x in items if items.count(x) > 1})
        raise DataError(f"{name} list contains duplicates: {dupes}")


def rank_intersection(causal_order: list[str],
                      shap_order: list[str]) -> tuple[list[str], list[int], list[int]]:
    """Common features with dense 1..n ranks from each list.

    Each feature keeps its raw position in both orderings; positions are then
    re-ranked within the intersection (preserving relative order) so both
    rank vectors are permutations of 1..n. Output is ordered by position in
    the attribution list.
    """
    _check_duplicate_free("causal", causal_order)
    _check_duplicate_free("attribution", shap_order)
    causal_pos = {f: i for i, f in enumerate(causal_order)}
    common = [f for f in shap_order if f in causal_pos]
    if not common:
        raise DataError("the two rankings share no features; alignment is undefined")
    # dense re-rank: sort the raw positions within the intersection
    by_causal = sorted(common, key=lambda f: causal_pos[f])
    causal_rank = {f: i + 1 for i, f in enumerate(by_causal)}
    shap_rank = {f: i + 1 for i, f in enumerate(common)}
    r_c = [causal_rank[f] for f in common]
    r_f = [shap_rank[f] for f in common]
    return common, r_c, r_f


def spearman_rho(r_causal: list[int], r_shap: list[int]) -> float:
    """rho = 1 - 6 * sum(d_i^2) / (n (n^2 - 1)) over two 1..n rank vectors."""
    n = len(r_causal)
    if len(r_shap) != n:
        raise DataError("rank vectors must have equal length")
    if n < 2:
        raise DataError("need at least 2 common features for a rank correlation")
    for name, r in (("causal", r_causal), ("attribution", r_shap)):
        if sorted(r) != list(range(1, n + 1)):
            raise DataError(f"{name} rank vector is not a permutation of 1..{n}")
    d2 = sum((a - b) ** 2 for a, b in zip(r_causal, r_shap))
    return 1.0 - (6.0 * d2) / (n * (n * n - 1))


def align_report(shap_order: list[str], causal_order: list[str],
                 k: int | None = None) -> AlignmentResult:
    """Alignment of the top-k attribution features against the causal order.

    shap_order must already be sorted by importance (rank 1 first) and
    causal_order by ascending p-value. k defaults to the full attribution
    list (callers typically pre-trim it to nonzero-importance features).
    """
    if k is not None:
        if k < 2:
            raise DataError(f"top-k must be at least 2, got {k}")
        shap_order = list(shap_order)[:k]
    common, r_c, r_f = rank_intersection(list(causal_order), list(shap_order))
    rho = spearman_rho(r_c, r_f)
    d = [a - b for a, b in zip(r_c, r_f)]
    return AlignmentResult(common=tuple(common), r_causal=tuple(r_c),
                           r_shap=tuple(r_f), d=tuple(d), n=len(common), rho=rho)
