# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled tree kernels for the adaptive integrator.

Leaves are stored per segment in left-to-right order as (depth, idx) pairs of
a dyadic tree whose root is the whole segment.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, ldexp, NAN

cnp.import_array()


def accept_marks(const int[:] seg, const int[:] depth, const long long[:] idx,
                 const double[:] d, const double[:] seg_width, double share_per_len):
    """Flag leaves lying under an accepted node (or accepted themselves).

    A node, leaf or internal, is accepted when the absolute values of ``d``
    over its leaves add up to at most share * width.
    """
    cdef Py_ssize_t n = seg.shape[0]
    cdef Py_ssize_t i, top = 0
    cdef int cur_seg = -1
    cdef double w, sl, sr
    cdef cnp.ndarray[cnp.int32_t] diff_arr = np.zeros(n + 1, dtype=np.int32)
    cdef int[:] diff = diff_arr
    cdef cnp.ndarray[cnp.uint8_t] out_arr = np.zeros(n, dtype=np.uint8)
    cdef unsigned char[:] out = out_arr
    # stack of partially merged nodes
    cdef int[:] sd = np.empty(128, dtype=np.int32)
    cdef long long[:] si = np.empty(128, dtype=np.int64)
    cdef double[:] ss = np.empty(128, dtype=np.float64)
    cdef Py_ssize_t[:] st = np.empty(128, dtype=np.intp)
    cdef int running = 0

    for i in range(n):
        if seg[i] != cur_seg:
            if top > 1:
                raise ValueError("leaves of a segment do not form a full dyadic tree")
            cur_seg = seg[i]
            top = 0
        w = ldexp(seg_width[cur_seg], -depth[i])
        if fabs(d[i]) <= share_per_len * w:
            diff[i] += 1
            diff[i + 1] -= 1
        if top >= 127:
            raise ValueError("tree too deep")
        sd[top] = depth[i]
        si[top] = idx[i]
        ss[top] = fabs(d[i])
        st[top] = i
        top += 1
        while top >= 2 and sd[top - 1] == sd[top - 2] and si[top - 2] % 2 == 0 \
                and si[top - 2] + 1 == si[top - 1]:
            sl = ss[top - 2]
            sr = ss[top - 1]
            top -= 1
            sd[top - 1] -= 1
            si[top - 1] //= 2
            ss[top - 1] = sl + sr
            w = ldexp(seg_width[cur_seg], -sd[top - 1])
            if fabs(sl) + fabs(sr) <= share_per_len * w:
                diff[st[top - 1]] += 1
                diff[i + 1] -= 1
    if top > 1:
        raise ValueError("leaves of a segment do not form a full dyadic tree")
    for i in range(n):
        running += diff[i]
        out[i] = 1 if running > 0 else 0
    return out_arr


def rebuild(const signed char[:] split, const int[:] seg, const int[:] depth,
            const long long[:] idx, const double[:] v, const double[:] cl,
            const double[:] cr):
    """Replace each leaf by its 2**split[i] descendants.

    One-level splits reuse the known child values as leaf values (status 1);
    deeper splits leave values unknown (NaN, status 2). Kept leaves have
    status 0 and keep their child values.
    """
    cdef Py_ssize_t n = split.shape[0]
    cdef Py_ssize_t i, j, m = 0, pos = 0
    cdef long long cnt, base
    for i in range(n):
        m += (<Py_ssize_t>1) << split[i]
    seg_o = np.empty(m, dtype=np.int32)
    depth_o = np.empty(m, dtype=np.int32)
    idx_o = np.empty(m, dtype=np.int64)
    v_o = np.empty(m, dtype=np.float64)
    cl_o = np.empty(m, dtype=np.float64)
    cr_o = np.empty(m, dtype=np.float64)
    st_o = np.empty(m, dtype=np.uint8)
    cdef int[:] so = seg_o
    cdef int[:] do = depth_o
    cdef long long[:] io = idx_o
    cdef double[:] vo = v_o
    cdef double[:] lo = cl_o
    cdef double[:] ro = cr_o
    cdef unsigned char[:] sto = st_o
    for i in range(n):
        if split[i] == 0:
            so[pos] = seg[i]
            do[pos] = depth[i]
            io[pos] = idx[i]
            vo[pos] = v[i]
            lo[pos] = cl[i]
            ro[pos] = cr[i]
            sto[pos] = 0
            pos += 1
        elif split[i] == 1:
            for j in range(2):
                so[pos] = seg[i]
                do[pos] = depth[i] + 1
                io[pos] = 2 * idx[i] + j
                vo[pos] = cl[i] if j == 0 else cr[i]
                lo[pos] = NAN
                ro[pos] = NAN
                sto[pos] = 1
                pos += 1
        else:
            cnt = (<long long>1) << split[i]
            base = idx[i] << split[i]
            for j in range(cnt):
                so[pos] = seg[i]
                do[pos] = depth[i] + split[i]
                io[pos] = base + j
                vo[pos] = NAN
                lo[pos] = NAN
                ro[pos] = NAN
                sto[pos] = 2
                pos += 1
    return seg_o, depth_o, idx_o, v_o, cl_o, cr_o, st_o
