# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled run labeling kernel: one C pass over the pixels.

Same contract as the pure fallback in ``_runlabel_py``: black runs are
8-connected, white runs 4-connected, labels compacted in raster-first order.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


cdef inline int _find(cnp.int32_t* parent, int i) nogil:
    while parent[i] != i:
        parent[i] = parent[parent[i]]
        i = parent[i]
    return i


def label_runs(black):
    """Label both colors of a binary image; see the pure backend docstring."""
    if black.ndim != 2 or black.size == 0:
        raise ValueError("expected a non-empty 2D binary image")
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] img = np.ascontiguousarray(black, dtype=np.uint8)
    cdef int h = img.shape[0]
    cdef int w = img.shape[1]
    cdef int i, j, n_runs = 0

    # Pass 1: count runs.
    cdef cnp.uint8_t* px
    for i in range(h):
        px = &img[i, 0]
        n_runs += 1
        for j in range(1, w):
            if px[j] != px[j - 1]:
                n_runs += 1

    cdef cnp.ndarray[cnp.int32_t, ndim=1] rows = np.empty(n_runs, dtype=np.int32)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] c0 = np.empty(n_runs, dtype=np.int32)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] c1 = np.empty(n_runs, dtype=np.int32)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] colors = np.empty(n_runs, dtype=np.uint8)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] labels = np.empty(n_runs, dtype=np.int32)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] parent_arr = np.empty(n_runs, dtype=np.int32)

    cdef cnp.int32_t* prow = &rows[0]
    cdef cnp.int32_t* pc0 = &c0[0]
    cdef cnp.int32_t* pc1 = &c1[0]
    cdef cnp.uint8_t* pcol = &colors[0]
    cdef cnp.int32_t* parent = &parent_arr[0]
    cdef cnp.int32_t* plab = &labels[0]

    # Pass 2: extract runs and link them with union-find.
    cdef int k = 0, run_start, prev_lo = 0, prev_hi = 0, row_begin = 0
    cdef int p = 0, q, lo, hi, color, ri, rj
    for i in range(h):
        px = &img[i, 0]
        if i > 0:
            prev_lo = row_begin
            prev_hi = k
            row_begin = k
            p = prev_lo
        run_start = 0
        for j in range(1, w + 1):
            if j == w or px[j] != px[run_start]:
                prow[k] = i
                pc0[k] = run_start
                pc1[k] = j
                pcol[k] = px[run_start]
                parent[k] = k
                if i > 0:
                    lo = run_start
                    hi = j
                    color = px[run_start]
                    while p < prev_hi and pc1[p] < lo:
                        p += 1
                    q = p
                    while q < prev_hi and pc0[q] <= hi:
                        if pcol[q] == color:
                            if color == 1 or (pc0[q] < hi and pc1[q] > lo):
                                ri = _find(parent, k)
                                rj = _find(parent, q)
                                if ri != rj:
                                    if ri < rj:
                                        parent[rj] = ri
                                    else:
                                        parent[ri] = rj
                        q += 1
                k += 1
                run_start = j

    # Pass 3: resolve and compact in raster-first order.
    cdef cnp.ndarray[cnp.int32_t, ndim=1] compact = np.full(n_runs, -1, dtype=np.int32)
    cdef cnp.int32_t* pcompact = &compact[0]
    cdef int n_regions = 0, root
    for k in range(n_runs):
        root = _find(parent, k)
        if pcompact[root] < 0:
            pcompact[root] = n_regions
            n_regions += 1
        plab[k] = pcompact[root]

    return rows, c0, c1, colors, labels, n_regions
