"""Path-dependent Tree SHAP kernel.

The recursion keeps a path of unique features, each with the fraction of
cover-weighted subsets flowing down the branch when the feature is masked
(zero fraction) or followed (one fraction), plus permutation weights. The
recursion is unrolled onto an explicit stack so numba can compile it; each
tree-depth level owns a region of the workspace arrays, and a child copies
its parent's path region before extending it.
"""

import numpy as np
from numba import njit


@njit(cache=True, inline="always")
def _go_left(x, node, threshold, is_cat_split, cat_pool, cat_off, cat_len):
    if is_cat_split[node]:
        code = np.int64(x)
        for t in range(cat_off[node], cat_off[node] + cat_len[node]):
            if cat_pool[t] == code:
                return True
        return False
    return x <= threshold[node]


@njit(cache=True)
def tree_shap_batch(feature, threshold, is_cat_split, cat_pool, cat_off, cat_len,
                    left, right, cover, value, max_depth, X, scale, out):
    """Accumulate scale * phi(row) into out for every row of X."""
    levels = max_depth + 2
    wsize = levels * (levels + 1) // 2
    pd = np.empty(wsize, np.int64)
    pz = np.empty(wsize, np.float64)
    po = np.empty(wsize, np.float64)
    pw = np.empty(wsize, np.float64)

    cap = 2 * (levels + 1)
    st_node = np.empty(cap, np.int64)
    st_depth = np.empty(cap, np.int64)
    st_plen = np.empty(cap, np.int64)
    st_pz = np.empty(cap, np.float64)
    st_po = np.empty(cap, np.float64)
    st_pi = np.empty(cap, np.int64)

    for row in range(X.shape[0]):
        x = X[row]
        sp = 0
        st_node[sp] = 0
        st_depth[sp] = 0
        st_plen[sp] = 0
        st_pz[sp] = 1.0
        st_po[sp] = 1.0
        st_pi[sp] = -1
        sp += 1
        while sp > 0:
            sp -= 1
            node = st_node[sp]
            depth = st_depth[sp]
            plen = st_plen[sp]
            pzf = st_pz[sp]
            pof = st_po[sp]
            pif = st_pi[sp]

            off = depth * (depth + 1) // 2
            if depth > 0:
                poff = (depth - 1) * depth // 2
                for i in range(plen):
                    pd[off + i] = pd[poff + i]
                    pz[off + i] = pz[poff + i]
                    po[off + i] = po[poff + i]
                    pw[off + i] = pw[poff + i]

            # extend the path with the branch that led here
            pd[off + plen] = pif
            pz[off + plen] = pzf
            po[off + plen] = pof
            pw[off + plen] = 1.0 if plen == 0 else 0.0
            for i in range(plen - 1, -1, -1):
                pw[off + i + 1] += pof * pw[off + i] * (i + 1) / (plen + 1)
                pw[off + i] = pzf * pw[off + i] * (plen - i) / (plen + 1)
            l = plen + 1

            if feature[node] < 0:
                # leaf: contribution of every real feature on the path
                v = value[node]
                d_top = l - 1
                for i in range(1, l):
                    o = po[off + i]
                    z = pz[off + i]
                    nxt = pw[off + d_top]
                    total = 0.0
                    if o != 0.0:
                        for j in range(d_top - 1, -1, -1):
                            w = nxt * (d_top + 1) / ((j + 1) * o)
                            total += w
                            nxt = pw[off + j] - w * z * (d_top - j) / (d_top + 1)
                    else:
                        for j in range(d_top - 1, -1, -1):
                            total += pw[off + j] * (d_top + 1) / (z * (d_top - j))
                    out[row, pd[off + i]] += scale * total * (o - z) * v
                continue

            f = feature[node]
            if _go_left(x[f], node, threshold, is_cat_split, cat_pool, cat_off, cat_len):
                hot = left[node]
                cold = right[node]
            else:
                hot = right[node]
                cold = left[node]

            iz = 1.0
            io = 1.0
            k = -1
            for i in range(1, l):
                if pd[off + i] == f:
                    k = i
                    break
            if k >= 0:
                iz = pz[off + k]
                io = po[off + k]
                # unwind entry k out of the path
                d_top = l - 1
                o = po[off + k]
                z = pz[off + k]
                nxt = pw[off + d_top]
                for j in range(d_top - 1, -1, -1):
                    if o != 0.0:
                        tmp = pw[off + j]
                        pw[off + j] = nxt * (d_top + 1) / ((j + 1) * o)
                        nxt = tmp - pw[off + j] * z * (d_top - j) / (d_top + 1)
                    else:
                        pw[off + j] = pw[off + j] * (d_top + 1) / (z * (d_top - j))
                for j in range(k, d_top):
                    pd[off + j] = pd[off + j + 1]
                    pz[off + j] = pz[off + j + 1]
                    po[off + j] = po[off + j + 1]
                l -= 1

            rj = cover[node]
            st_node[sp] = cold
            st_depth[sp] = depth + 1
            st_plen[sp] = l
            st_pz[sp] = iz * cover[cold] / rj
            st_po[sp] = 0.0
            st_pi[sp] = f
            sp += 1
            st_node[sp] = hot
            st_depth[sp] = depth + 1
            st_plen[sp] = l
            st_pz[sp] = iz * cover[hot] / rj
            st_po[sp] = io
            st_pi[sp] = f
            sp += 1
