"""Numba kernels for histogram tree growth and prediction.

All kernels are single-threaded and deterministic: ties in split search are
broken toward the lowest feature index, then the lowest bin.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def find_segment_splits(codes, g, h, row_order, seg_start, seg_end,
                        n_bins, is_cat, lam, min_child,
                        hist_g, hist_h, hist_c,
                        out_feat, out_bin, out_gain):
    """Best split per row segment.

    codes: (n, p) uint16 bin/level codes. row_order holds row indices grouped
    into segments [seg_start[s], seg_end[s]). hist_* are (p, max_bins)
    scratch buffers that must be zero on entry; they are re-zeroed before
    returning. Outputs per segment: feature, bin (split point), gain
    (gain <= 0 or feature == -1 means no split).
    """
    p = codes.shape[1]
    lo = np.empty(p, np.int64)
    hi = np.empty(p, np.int64)
    for s in range(seg_start.shape[0]):
        a = seg_start[s]
        b = seg_end[s]
        n_node = b - a
        for j in range(p):
            lo[j] = n_bins[j]
            hi[j] = -1
        g_tot = 0.0
        h_tot = 0.0
        for r in range(a, b):
            i = row_order[r]
            gi = g[i]
            hi_ = h[i]
            g_tot += gi
            h_tot += hi_
            for j in range(p):
                c = codes[i, j]
                hist_g[j, c] += gi
                hist_h[j, c] += hi_
                hist_c[j, c] += 1.0
                if c < lo[j]:
                    lo[j] = c
                if c > hi[j]:
                    hi[j] = c

        parent_score = g_tot * g_tot / (h_tot + lam)
        best_gain = 0.0
        best_feat = -1
        best_bin = -1
        for j in range(p):
            if hi[j] < lo[j]:
                continue
            if hi[j] == lo[j]:  # constant within this node: just reset its bin
                hist_g[j, lo[j]] = 0.0
                hist_h[j, lo[j]] = 0.0
                hist_c[j, lo[j]] = 0.0
                continue
            if is_cat[j]:
                for c in range(lo[j], hi[j] + 1):
                    cl = hist_c[j, c]
                    gl = hist_g[j, c]
                    hl = hist_h[j, c]
                    hist_g[j, c] = 0.0
                    hist_h[j, c] = 0.0
                    hist_c[j, c] = 0.0
                    if cl < min_child or n_node - cl < min_child:
                        continue
                    gain = (gl * gl / (hl + lam)
                            + (g_tot - gl) * (g_tot - gl) / (h_tot - hl + lam)
                            - parent_score)
                    if gain > best_gain:
                        best_gain = gain
                        best_feat = j
                        best_bin = c
            else:
                gl = 0.0
                hl = 0.0
                cl = 0.0
                for c in range(lo[j], hi[j] + 1):
                    gl += hist_g[j, c]
                    hl += hist_h[j, c]
                    cl += hist_c[j, c]
                    hist_g[j, c] = 0.0
                    hist_h[j, c] = 0.0
                    hist_c[j, c] = 0.0
                    if cl < min_child or n_node - cl < min_child:
                        continue  # also rejects the full prefix at c == hi[j]
                    gain = (gl * gl / (hl + lam)
                            + (g_tot - gl) * (g_tot - gl) / (h_tot - hl + lam)
                            - parent_score)
                    if gain > best_gain:
                        best_gain = gain
                        best_feat = j
                        best_bin = c

        out_feat[s] = best_feat
        out_bin[s] = best_bin
        out_gain[s] = best_gain


@njit(cache=True)
def partition_segment(codes, row_order, a, b, feat, split_bin, cat_split, scratch):
    """Stable in-place partition of row_order[a:b]; returns the boundary.

    Numeric: code <= split_bin goes left. Categorical: code == split_bin
    goes left.
    """
    nl = a
    nr = 0
    for r in range(a, b):
        i = row_order[r]
        c = codes[i, feat]
        if cat_split:
            left = c == split_bin
        else:
            left = c <= split_bin
        if left:
            row_order[nl] = i
            nl += 1
        else:
            scratch[nr] = i
            nr += 1
    for k in range(nr):
        row_order[nl + k] = scratch[k]
    return nl


@njit(cache=True)
def node_stats(g, h, row_order, a, b):
    gs = 0.0
    hs = 0.0
    for r in range(a, b):
        i = row_order[r]
        gs += g[i]
        hs += h[i]
    return gs, hs


@njit(cache=True)
def assign_leaves(X, feature, threshold, is_cat_split, cat_pool, cat_off, cat_len,
                  left, right, out):
    """Route every row of X to its leaf; writes leaf node indices into out.

    Categorical features carry level codes in X as floats; membership in the
    node's left-level set routes left, everything else (including unseen
    codes) routes right.
    """
    n = X.shape[0]
    for i in range(n):
        node = 0
        while feature[node] >= 0:
            f = feature[node]
            x = X[i, f]
            if is_cat_split[node]:
                code = np.int64(x)
                go_left = False
                for t in range(cat_off[node], cat_off[node] + cat_len[node]):
                    if cat_pool[t] == code:
                        go_left = True
                        break
            else:
                go_left = x <= threshold[node]
            if go_left:
                node = left[node]
            else:
                node = right[node]
        out[i] = node


@njit(cache=True)
def add_leaf_values(X, feature, threshold, is_cat_split, cat_pool, cat_off, cat_len,
                    left, right, value, scale, out):
    """out += scale * leaf_value(x) for every row."""
    n = X.shape[0]
    for i in range(n):
        node = 0
        while feature[node] >= 0:
            f = feature[node]
            x = X[i, f]
            if is_cat_split[node]:
                code = np.int64(x)
                go_left = False
                for t in range(cat_off[node], cat_off[node] + cat_len[node]):
                    if cat_pool[t] == code:
                        go_left = True
                        break
            else:
                go_left = x <= threshold[node]
            if go_left:
                node = left[node]
            else:
                node = right[node]
        out[i] += scale * value[node]
