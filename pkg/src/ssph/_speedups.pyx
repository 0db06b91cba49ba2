# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled core for the hot particle loops.

Implements the pairwise-difference derivative sum and a uniform cell-grid
neighbor search.  Both functions mirror the NumPy fallback in
``ssph.backend``: identical neighbor sets with per-row ascending indices,
and derivative sums accumulated in CSR order.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport floor, sqrt
from libc.stdlib cimport free, malloc

cnp.import_array()


def pair_diff_apply(cnp.int64_t[::1] indptr, cnp.int64_t[::1] indices,
                    double[::1] w, double[:, ::1] rows):
    """out[l, j] = sum_p w[p] * (rows[l, indices[p]] - rows[l, j])."""
    cdef Py_ssize_t L = rows.shape[0]
    cdef Py_ssize_t N = indptr.shape[0] - 1
    out_arr = np.empty((L, N), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t l, j, p
    cdef double center, acc
    for l in range(L):
        for j in range(N):
            center = rows[l, j]
            acc = 0.0
            for p in range(indptr[j], indptr[j + 1]):
                acc += w[p] * (rows[l, indices[p]] - center)
            out[l, j] = acc
    return out_arr


cdef inline cnp.int64_t _wrap(cnp.int64_t c, cnp.int64_t n) nogil:
    cdef cnp.int64_t r = c % n
    if r < 0:
        r += n
    return r


def cell_neighbors(double[:, ::1] pos, double cutoff, period):
    """CSR neighbor lists from a uniform cell grid of size >= cutoff.

    ``period`` is None for open topology or a length-d array of box sizes
    for the minimum-image metric.  Row indices come out ascending.
    """
    cdef Py_ssize_t n = pos.shape[0]
    cdef Py_ssize_t d = pos.shape[1]
    if d > 3:
        raise ValueError("cell_neighbors supports up to 3 dimensions")

    cdef bint periodic = period is not None
    cdef double[3] box
    cdef double[3] lo
    cdef cnp.int64_t[3] ncell
    cdef Py_ssize_t a, j, p

    per_arr = np.ascontiguousarray(period, dtype=np.float64) if periodic else None
    cdef double[::1] per_view
    if periodic:
        per_view = per_arr

    pos_np = np.asarray(pos)
    for a in range(3):
        box[a] = 1.0
        lo[a] = 0.0
        ncell[a] = 1
    cdef double extent
    for a in range(d):
        if periodic:
            box[a] = per_view[a]
            lo[a] = 0.0
            ncell[a] = <cnp.int64_t>floor(box[a] / cutoff)
            if ncell[a] < 1:
                ncell[a] = 1
        else:
            lo[a] = pos_np[:, a].min()
            extent = pos_np[:, a].max() - lo[a]
            ncell[a] = <cnp.int64_t>floor(extent / cutoff) + 1
            if ncell[a] < 1:
                ncell[a] = 1

    cdef cnp.int64_t ntot = ncell[0] * ncell[1] * ncell[2]

    # counting sort of particles by flat cell id (stable: ids stay ascending)
    cell_of = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] cell_ids = cell_of
    cdef cnp.int64_t cx, cy, cz, flat
    cdef cnp.int64_t[3] cc
    for j in range(n):
        for a in range(d):
            cc[a] = <cnp.int64_t>floor((pos[j, a] - lo[a]) / cutoff)
            if cc[a] >= ncell[a]:
                cc[a] = ncell[a] - 1
            if cc[a] < 0:
                cc[a] = 0
        for a in range(d, 3):
            cc[a] = 0
        cell_ids[j] = (cc[0] * ncell[1] + cc[1]) * ncell[2] + cc[2]

    starts_arr = np.zeros(ntot + 1, dtype=np.int64)
    cdef cnp.int64_t[::1] starts = starts_arr
    for j in range(n):
        starts[cell_ids[j] + 1] += 1
    for p in range(ntot):
        starts[p + 1] += starts[p]
    order_arr = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] order = order_arr
    fill_arr = starts_arr[:-1].copy()
    cdef cnp.int64_t[::1] fill = fill_arr
    for j in range(n):
        order[fill[cell_ids[j]]] = j
        fill[cell_ids[j]] += 1

    cdef double c2 = cutoff * cutoff
    cdef cnp.int64_t[::1] cand_cells
    cand_arr = np.empty(27, dtype=np.int64)
    cand_cells = cand_arr

    indptr_arr = np.zeros(n + 1, dtype=np.int64)
    cdef cnp.int64_t[::1] indptr = indptr_arr

    cdef Py_ssize_t pass_id, ncand, ci, q, k, noff
    cdef cnp.int64_t ox, oy, oz, gx, gy, gz, cid, prev
    cdef double dist2, diff
    cdef cnp.int64_t total = 0
    cdef cnp.int64_t[::1] indices
    indices_arr = None
    cdef cnp.int64_t write

    for pass_id in range(2):
        if pass_id == 1:
            for j in range(n):
                indptr[j + 1] += indptr[j]
            indices_arr = np.empty(indptr[n], dtype=np.int64)
            indices = indices_arr
        for j in range(n):
            for a in range(d):
                cc[a] = <cnp.int64_t>floor((pos[j, a] - lo[a]) / cutoff)
                if cc[a] >= ncell[a]:
                    cc[a] = ncell[a] - 1
                if cc[a] < 0:
                    cc[a] = 0
            for a in range(d, 3):
                cc[a] = 0
            # gather distinct candidate cells (offsets can alias when wrapped)
            ncand = 0
            for ox in range(-1, 2):
                gx = cc[0] + ox
                if periodic and d >= 1:
                    gx = _wrap(gx, ncell[0])
                if gx < 0 or gx >= ncell[0]:
                    continue
                for oy in range(-1, 2) if d >= 2 else range(0, 1):
                    gy = cc[1] + oy
                    if d >= 2:
                        if periodic:
                            gy = _wrap(gy, ncell[1])
                        if gy < 0 or gy >= ncell[1]:
                            continue
                    else:
                        gy = 0
                    for oz in range(-1, 2) if d >= 3 else range(0, 1):
                        gz = cc[2] + oz
                        if d >= 3:
                            if periodic:
                                gz = _wrap(gz, ncell[2])
                            if gz < 0 or gz >= ncell[2]:
                                continue
                        else:
                            gz = 0
                        cid = (gx * ncell[1] + gy) * ncell[2] + gz
                        for q in range(ncand):
                            if cand_cells[q] == cid:
                                break
                        else:
                            cand_cells[ncand] = cid
                            ncand += 1
            # sort candidate cells ascending so ids come out ordered per cell
            for q in range(1, ncand):
                cid = cand_cells[q]
                k = q
                while k > 0 and cand_cells[k - 1] > cid:
                    cand_cells[k] = cand_cells[k - 1]
                    k -= 1
                cand_cells[k] = cid

            write = indptr[j] if pass_id == 1 else 0
            total = 0
            for q in range(ncand):
                cid = cand_cells[q]
                for ci in range(starts[cid], starts[cid + 1]):
                    k = order[ci]
                    dist2 = 0.0
                    for a in range(d):
                        diff = pos[j, a] - pos[k, a]
                        if periodic:
                            diff = diff - box[a] * floor(diff / box[a] + 0.5)
                        dist2 += diff * diff
                    if dist2 <= c2:
                        if pass_id == 0:
                            total += 1
                        else:
                            indices[write] = k
                            write += 1
            if pass_id == 0:
                indptr[j + 1] = total

        # ids within one cell are ascending but cells aren't contiguous id
        # ranges, so each row still needs a final sort on pass 1
        if pass_id == 1:
            for j in range(n):
                _insertion_sort(indices, indptr[j], indptr[j + 1])

    return indptr_arr, indices_arr


cdef inline void _insertion_sort(cnp.int64_t[::1] arr, cnp.int64_t lo, cnp.int64_t hi) nogil:
    cdef cnp.int64_t i, k, v
    for i in range(lo + 1, hi):
        v = arr[i]
        k = i
        while k > lo and arr[k - 1] > v:
            arr[k] = arr[k - 1]
            k -= 1
        arr[k] = v
