"""Regression tree growth with leaf-wise and level-wise strategies."""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from ..errors import DataError
from . import _kernels
from .binning import BinnedDesign


@dataclass(frozen=True)
class LeafWise:
    """Best-first growth: always split the frontier leaf of maximum gain."""

    num_leaves: int
    min_child_samples: int = 20
    max_depth: int = 31

    def __post_init__(self):
        if self.num_leaves < 2:
            raise DataError(f"num_leaves must be >= 2, got {self.num_leaves}")
        if self.min_child_samples < 1:
            raise DataError(f"min_child_samples must be >= 1, got {self.min_child_samples}")
        if self.max_depth < 1:
            raise DataError(f"max_depth must be >= 1, got {self.max_depth}")
        if self.num_leaves > 2 ** self.max_depth:
            raise DataError(
                f"num_leaves {self.num_leaves} exceeds 2^max_depth = {2 ** self.max_depth}")


@dataclass(frozen=True)
class LevelWise:
    """Breadth-first growth: expand every node at a depth before the next."""

    depth: int
    l2_leaf_reg: float = 1.0
    border_count: int = 128

    def __post_init__(self):
        if self.depth < 1:
            raise DataError(f"depth must be >= 1, got {self.depth}")
        if self.l2_leaf_reg < 0:
            raise DataError(f"l2_leaf_reg must be nonnegative, got {self.l2_leaf_reg}")
        if self.border_count < 2:
            raise DataError(f"border_count must be >= 2, got {self.border_count}")


GrowthStrategy = LeafWise | LevelWise


@dataclass
class TreeNode:
    """One node of a fitted regression tree.

    Split nodes have a feature index plus either a numeric threshold
    (x <= threshold routes left) or a set of categorical level codes routed
    left. Leaves carry the additive value in target units (before learning
    rate shrinkage). cover is the count of training samples reaching the
    node.
    """

    cover: float
    value: float = 0.0
    feature: int | None = None
    threshold: float | None = None
    left_levels: tuple[int, ...] | None = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    gain: float = 0.0

    @property
    def is_leaf(self) -> bool:
        return self.feature is None

    def leaves(self) -> list["TreeNode"]:
        if self.is_leaf:
            return [self]
        return self.left.leaves() + self.right.leaves()

    def depth(self) -> int:
        if self.is_leaf:
            return 0
        return 1 + max(self.left.depth(), self.right.depth())


@dataclass
class FlatTree:
    """Array form of a tree (preorder) consumed by the numba kernels."""

    feature: np.ndarray      # int64, -1 for leaves
    threshold: np.ndarray    # float64
    is_cat_split: np.ndarray  # bool
    cat_pool: np.ndarray     # int64, concatenated left-level codes
    cat_off: np.ndarray      # int64
    cat_len: np.ndarray      # int64
    left: np.ndarray         # int64, -1 for leaves
    right: np.ndarray        # int64
    value: np.ndarray        # float64 (leaf values; 0 elsewhere)
    cover: np.ndarray        # float64
    max_depth: int
    nodes: list[TreeNode] | None = None  # preorder view of the source nodes


def flatten_tree(root: TreeNode) -> FlatTree:
    nodes: list[TreeNode] = []

    def visit(node: TreeNode):
        nodes.append(node)
        if not node.is_leaf:
            visit(node.left)
            visit(node.right)

    visit(root)
    n = len(nodes)
    index = {id(node): i for i, node in enumerate(nodes)}
    feature = np.full(n, -1, dtype=np.int64)
    threshold = np.zeros(n, dtype=np.float64)
    is_cat = np.zeros(n, dtype=np.bool_)
    cat_pool: list[int] = []
    cat_off = np.zeros(n, dtype=np.int64)
    cat_len = np.zeros(n, dtype=np.int64)
    left = np.full(n, -1, dtype=np.int64)
    right = np.full(n, -1, dtype=np.int64)
    value = np.zeros(n, dtype=np.float64)
    cover = np.zeros(n, dtype=np.float64)
    for i, node in enumerate(nodes):
        cover[i] = node.cover
        if node.is_leaf:
            value[i] = node.value
            continue
        feature[i] = node.feature
        left[i] = index[id(node.left)]
        right[i] = index[id(node.right)]
        if node.left_levels is not None:
            is_cat[i] = True
            cat_off[i] = len(cat_pool)
            cat_len[i] = len(node.left_levels)
            cat_pool.extend(int(c) for c in node.left_levels)
        else:
            threshold[i] = node.threshold
    pool = np.asarray(cat_pool, dtype=np.int64) if cat_pool else np.zeros(1, dtype=np.int64)
    return FlatTree(feature, threshold, is_cat, pool, cat_off, cat_len,
                    left, right, value, cover, max_depth=root.depth(), nodes=nodes)


# ---------------------------------------------------------------------------
# Reference split search over explicit histogram stats
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HistogramBin:
    upper_edge: float
    grad_sum: float
    hess_sum: float
    count: int


@dataclass(frozen=True)
class SplitDecision:
    feature: str
    threshold: float  # numeric upper edge, or the level code routed left
    gain: float
    categorical: bool


def split_gain(g_left: float, h_left: float, g_right: float, h_right: float,
               lam: float) -> float:
    """Loss reduction of a candidate partition under L2 penalty lam."""
    g_tot = g_left + g_right
    h_tot = h_left + h_right
    return (g_left * g_left / (h_left + lam)
            + g_right * g_right / (h_right + lam)
            - g_tot * g_tot / (h_tot + lam))


def find_best_split(node_stats: dict[str, list[HistogramBin]], l2: float,
                    min_child_samples: int,
                    categorical: frozenset[str] | set[str] = frozenset()) -> SplitDecision | None:
    """Best split over per-feature histogram stats, or None.

    Numeric features are scanned as bin prefixes (left = bins up to the
    candidate); categorical features as one-vs-rest level partitions.
    Returns None when no candidate has positive gain and valid child sizes.
    """
    best: SplitDecision | None = None
    for name, bins in node_stats.items():
        if len(bins) < 2:
            continue
        g_tot = sum(b.grad_sum for b in bins)
        h_tot = sum(b.hess_sum for b in bins)
        n_tot = sum(b.count for b in bins)
        if categorical and name in categorical:
            candidates = range(len(bins))
            for c in candidates:
                b = bins[c]
                if b.count < min_child_samples or n_tot - b.count < min_child_samples:
                    continue
                if b.count == 0 or b.count == n_tot:
                    continue
                gain = split_gain(b.grad_sum, b.hess_sum,
                                  g_tot - b.grad_sum, h_tot - b.hess_sum, l2)
                if gain > 0 and (best is None or gain > best.gain):
                    best = SplitDecision(name, bins[c].upper_edge, gain, True)
        else:
            gl = hl = 0.0
            cl = 0
            for c in range(len(bins) - 1):
                gl += bins[c].grad_sum
                hl += bins[c].hess_sum
                cl += bins[c].count
                if cl < min_child_samples or n_tot - cl < min_child_samples:
                    continue
                gain = split_gain(gl, hl, g_tot - gl, h_tot - hl, l2)
                if gain > 0 and (best is None or gain > best.gain):
                    best = SplitDecision(name, bins[c].upper_edge, gain, False)
    return best


def node_histograms(design: BinnedDesign, gradients: np.ndarray,
                    hessians: np.ndarray, rows: np.ndarray) -> dict[str, list[HistogramBin]]:
    """Explicit per-feature histogram stats for one node's rows."""
    stats: dict[str, list[HistogramBin]] = {}
    for j, name in enumerate(design.feature_names):
        nb = int(design.n_bins[j])
        codes = design.codes[rows, j]
        gs = np.bincount(codes, weights=gradients[rows], minlength=nb)
        hs = np.bincount(codes, weights=hessians[rows], minlength=nb)
        cs = np.bincount(codes, minlength=nb)
        bins = []
        for b in range(nb):
            if design.is_cat[j]:
                edge = float(b)
            else:
                cuts = design.cuts[j]
                edge = float(cuts[b]) if b < len(cuts) else float("inf")
            bins.append(HistogramBin(edge, float(gs[b]), float(hs[b]), int(cs[b])))
        stats[name] = bins
    return stats


# ---------------------------------------------------------------------------
# Growth
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class _Segment:
    start: int
    end: int
    depth: int
    node: TreeNode


def _leaf_value(g_sum: float, h_sum: float, lam: float) -> float:
    return -g_sum / (h_sum + lam)


def _make_split(design: BinnedDesign, node: TreeNode, feat: int, split_bin: int,
                gain: float) -> None:
    node.feature = feat
    node.gain = float(gain)
    if design.is_cat[feat]:
        node.left_levels = (int(split_bin),)
    else:
        node.threshold = design.threshold_for(feat, split_bin)


def grow_tree(design: BinnedDesign, gradients: np.ndarray, hessians: np.ndarray,
              strategy: GrowthStrategy, rows: np.ndarray | None = None) -> TreeNode:
    """Grow one regression tree over a binned design.

    gradients/hessians are full-length vectors; rows (default: all) selects
    the training subset, e.g. a GOSS sample. Leaf values are -G / (H + lam)
    with lam = l2_leaf_reg for the level-wise strategy and 0 for leaf-wise.
    cover is the count of selected rows reaching each node.
    """
    n = design.n_rows
    if n == 0:
        raise DataError("cannot grow a tree on an empty table")
    g = np.ascontiguousarray(gradients, dtype=np.float64)
    h = np.ascontiguousarray(hessians, dtype=np.float64)
    if g.shape[0] != n or h.shape[0] != n:
        raise DataError("gradient/hessian length must equal the row count")

    row_order = (np.arange(n, dtype=np.int64) if rows is None
                 else np.asarray(rows, dtype=np.int64).copy())
    if row_order.size == 0:
        raise DataError("cannot grow a tree with no selected rows")
    scratch = np.empty(row_order.size, dtype=np.int64)
    max_bins = int(design.n_bins.max())
    hist_g = np.zeros((design.n_features, max_bins), dtype=np.float64)
    hist_h = np.zeros_like(hist_g)
    hist_c = np.zeros_like(hist_g)

    if isinstance(strategy, LeafWise):
        lam = 0.0
        min_child = strategy.min_child_samples
    else:
        lam = float(strategy.l2_leaf_reg)
        min_child = 1

    def segment_splits(segs: list[_Segment]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        starts = np.array([s.start for s in segs], dtype=np.int64)
        ends = np.array([s.end for s in segs], dtype=np.int64)
        feat = np.empty(len(segs), dtype=np.int64)
        bins = np.empty(len(segs), dtype=np.int64)
        gains = np.empty(len(segs), dtype=np.float64)
        _kernels.find_segment_splits(design.codes, g, h, row_order, starts, ends,
                                     design.n_bins, design.is_cat, lam, min_child,
                                     hist_g, hist_h, hist_c, feat, bins, gains)
        return feat, bins, gains

    def finalize_leaf(seg: _Segment) -> None:
        gs, hs = _kernels.node_stats(g, h, row_order, seg.start, seg.end)
        seg.node.value = _leaf_value(gs, hs, lam)

    root = TreeNode(cover=float(row_order.size))

    if isinstance(strategy, LevelWise):
        frontier = [_Segment(0, row_order.size, 0, root)]
        for _ in range(strategy.depth):
            expandable = []
            for s in frontier:
                if s.end - s.start >= 2 * min_child:
                    expandable.append(s)
                else:
                    finalize_leaf(s)
            if not expandable:
                frontier = []
                break
            feats, bins, gains = segment_splits(expandable)
            next_frontier: list[_Segment] = []
            for k, seg in enumerate(expandable):
                if feats[k] < 0 or gains[k] <= 0.0:
                    finalize_leaf(seg)
                    continue
                mid = _kernels.partition_segment(design.codes, row_order, seg.start,
                                                 seg.end, feats[k], bins[k],
                                                 bool(design.is_cat[feats[k]]), scratch)
                _make_split(design, seg.node, int(feats[k]), int(bins[k]), gains[k])
                seg.node.left = TreeNode(cover=float(mid - seg.start))
                seg.node.right = TreeNode(cover=float(seg.end - mid))
                next_frontier.append(_Segment(seg.start, mid, seg.depth + 1, seg.node.left))
                next_frontier.append(_Segment(mid, seg.end, seg.depth + 1, seg.node.right))
            frontier = next_frontier
        for seg in frontier:
            finalize_leaf(seg)
        return root

    # leaf-wise: best-first expansion driven by a max-gain heap
    heap: list[tuple[float, int, _Segment, int, int]] = []
    counter = 0

    def push_candidate(seg: _Segment) -> None:
        nonlocal counter
        if seg.depth >= strategy.max_depth or seg.end - seg.start < 2 * min_child:
            return
        feats, bins, gains = segment_splits([seg])
        if feats[0] < 0 or gains[0] <= 0.0:
            return
        heapq.heappush(heap, (-gains[0], counter, seg, int(feats[0]), int(bins[0])))
        counter += 1

    segments = {id(root): _Segment(0, row_order.size, 0, root)}
    push_candidate(segments[id(root)])
    n_leaves = 1
    while heap and n_leaves < strategy.num_leaves:
        neg_gain, _, seg, feat, split_bin = heapq.heappop(heap)
        mid = _kernels.partition_segment(design.codes, row_order, seg.start, seg.end,
                                         feat, split_bin, bool(design.is_cat[feat]),
                                         scratch)
        _make_split(design, seg.node, feat, split_bin, -neg_gain)
        seg.node.left = TreeNode(cover=float(mid - seg.start))
        seg.node.right = TreeNode(cover=float(seg.end - mid))
        left_seg = _Segment(seg.start, mid, seg.depth + 1, seg.node.left)
        right_seg = _Segment(mid, seg.end, seg.depth + 1, seg.node.right)
        segments[id(seg.node.left)] = left_seg
        segments[id(seg.node.right)] = right_seg
        n_leaves += 1
        push_candidate(left_seg)
        push_candidate(right_seg)

    for seg in segments.values():
        if seg.node.is_leaf:
            finalize_leaf(seg)
    return root
