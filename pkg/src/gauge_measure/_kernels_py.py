"""Numpy fallback for the compiled tree kernels; results are bit-identical."""

from __future__ import annotations

import numpy as np


def accept_marks(seg, depth, idx, d, seg_width, share_per_len):
    """Flag leaves lying under an accepted node (or accepted themselves).

    A node is accepted when the absolute values of ``d`` over its leaves add
    up to at most share * width. Works depth by depth from the bottom: items
    at one depth are sorted, paired with their siblings and merged.
    """
    seg = np.asarray(seg, dtype=np.int32)
    depth = np.asarray(depth, dtype=np.int32)
    idx = np.asarray(idx, dtype=np.int64)
    d = np.asarray(d, dtype=np.float64)
    seg_width = np.asarray(seg_width, dtype=np.float64)
    n = seg.size
    diff = np.zeros(n + 1, dtype=np.int64)
    if n == 0:
        return np.zeros(0, dtype=np.uint8)
    leaf_pos = np.arange(n)
    w = np.ldexp(seg_width[seg], -depth)
    ok = np.abs(d) <= share_per_len * w
    np.add.at(diff, leaf_pos[ok], 1)
    np.add.at(diff, leaf_pos[ok] + 1, -1)

    # carried nodes: seg, idx, sum, first leaf, last leaf
    c_seg = np.empty(0, dtype=np.int32)
    c_idx = np.empty(0, dtype=np.int64)
    c_sum = np.empty(0, dtype=np.float64)
    c_first = np.empty(0, dtype=np.int64)
    c_last = np.empty(0, dtype=np.int64)
    for p in range(int(depth.max()), 0, -1):
        at = depth == p
        i_seg = np.concatenate([seg[at], c_seg])
        i_idx = np.concatenate([idx[at], c_idx])
        i_sum = np.concatenate([np.abs(d[at]), c_sum])
        i_first = np.concatenate([leaf_pos[at], c_first])
        i_last = np.concatenate([leaf_pos[at], c_last])
        order = np.lexsort((i_idx, i_seg))
        i_seg, i_idx, i_sum = i_seg[order], i_idx[order], i_sum[order]
        i_first, i_last = i_first[order], i_last[order]
        if i_seg.size % 2:
            raise ValueError("leaves of a segment do not form a full dyadic tree")
        ls, rs = slice(0, None, 2), slice(1, None, 2)
        if np.any(i_seg[ls] != i_seg[rs]) or np.any(i_idx[ls] % 2 != 0) or np.any(i_idx[ls] + 1 != i_idx[rs]):
            raise ValueError("leaves of a segment do not form a full dyadic tree")
        sl, sr = i_sum[ls], i_sum[rs]
        c_seg = i_seg[ls]
        c_idx = i_idx[ls] // 2
        c_sum = sl + sr
        c_first = i_first[ls]
        c_last = i_last[rs]
        wp = np.ldexp(seg_width[c_seg], -(p - 1))
        acc = np.abs(sl) + np.abs(sr) <= share_per_len * wp
        np.add.at(diff, c_first[acc], 1)
        np.add.at(diff, c_last[acc] + 1, -1)
    return (np.cumsum(diff[:n]) > 0).astype(np.uint8)


def rebuild(split, seg, depth, idx, v, cl, cr):
    """Replace each leaf by its 2**split[i] descendants (see compiled version)."""
    split = np.asarray(split, dtype=np.int8)
    counts = np.left_shift(np.int64(1), split.astype(np.int64))
    m = int(counts.sum())
    rep = np.repeat(np.arange(split.size), counts)
    start = np.cumsum(counts) - counts
    offset = np.arange(m, dtype=np.int64) - start[rep]
    k = split.astype(np.int64)[rep]
    seg_o = np.asarray(seg, dtype=np.int32)[rep]
    depth_o = (np.asarray(depth, dtype=np.int32)[rep] + k).astype(np.int32)
    idx_o = np.left_shift(np.asarray(idx, dtype=np.int64)[rep], k) + offset
    v_in = np.asarray(v, dtype=np.float64)[rep]
    cl_in = np.asarray(cl, dtype=np.float64)[rep]
    cr_in = np.asarray(cr, dtype=np.float64)[rep]
    v_o = np.where(k == 0, v_in, np.where(k == 1, np.where(offset == 0, cl_in, cr_in), np.nan))
    cl_o = np.where(k == 0, cl_in, np.nan)
    cr_o = np.where(k == 0, cr_in, np.nan)
    st_o = np.minimum(k, 2).astype(np.uint8)
    return seg_o, depth_o, idx_o, v_o, cl_o, cr_o, st_o
