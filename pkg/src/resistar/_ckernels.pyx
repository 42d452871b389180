# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled classification kernels; same contracts as ``_pykernels``."""

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt, INFINITY
from libc.stdlib cimport malloc, free

cnp.import_array()

cdef enum:
    MAXD = 32
cdef double TINY = 1e-15


cdef inline bint in_face(long long mask, long long fixed, long long offset) nogil:
    return (mask & fixed) == offset


cdef int cube_point(const double[:, ::1] local, const long long[::1] mm, const long long[::1] mp,
                    const double[::1] x, double delta, int* members, int* scratch) nogil:
    cdef int d = x.shape[0]
    cdef int k = mm.shape[0]
    cdef int nmem = k
    cdef int i, a, j, best_axis, best_side, side, ninner
    cdef long long fixed = 0, offset = 0
    cdef double xi[MAXD]
    cdef double bary[MAXD]
    cdef double dist2, step, ta, best_t, v
    cdef int* tmp
    for a in range(d):
        xi[a] = x[a]
    for i in range(k):
        members[i] = i
    while True:
        for a in range(d):
            bary[a] = 0.0
        for j in range(nmem):
            i = members[j]
            for a in range(d):
                bary[a] += local[i, a]
        for a in range(d):
            bary[a] /= nmem
        dist2 = 0.0
        for a in range(d):
            dist2 += (xi[a] - bary[a]) * (xi[a] - bary[a])
        if sqrt(dist2) < delta:
            return 0
        best_t = INFINITY
        best_axis = -1
        best_side = 0
        for a in range(d):
            if (fixed >> a) & 1:
                continue
            step = xi[a] - bary[a]
            if step > TINY:
                ta = (1.0 - bary[a]) / step
                side = 1
            elif step < -TINY:
                ta = -bary[a] / step
                side = 0
            else:
                continue
            if ta < best_t:
                best_t = ta
                best_axis = a
                best_side = side
        if best_axis < 0:
            return 0
        for a in range(d):
            if not ((fixed >> a) & 1):
                v = bary[a] + best_t * (xi[a] - bary[a])
                if v < 0.0:
                    v = 0.0
                elif v > 1.0:
                    v = 1.0
                xi[a] = v
        xi[best_axis] = best_side
        fixed |= (<long long>1) << best_axis
        offset |= (<long long>best_side) << best_axis
        ninner = 0
        for j in range(nmem):
            i = members[j]
            if in_face(mm[i], fixed, offset) and in_face(mp[i], fixed, offset):
                scratch[ninner] = i
                ninner += 1
        if ninner == 0:
            for j in range(nmem):
                i = members[j]
                if in_face(mp[i], fixed, offset):
                    return 1
                if in_face(mm[i], fixed, offset):
                    return -1
            return 2  # inconsistent store
        tmp = members
        members = scratch
        scratch = tmp
        nmem = ninner


def classify_cube_batch(local, mask_minus, mask_plus, xs, double delta):
    cdef const long long[::1] mm = np.ascontiguousarray(mask_minus, dtype=np.int64)
    cdef const long long[::1] mp = np.ascontiguousarray(mask_plus, dtype=np.int64)
    cdef const double[:, ::1] xv = np.ascontiguousarray(xs, dtype=np.float64)
    cdef const double[:, ::1] lv = np.ascontiguousarray(local, dtype=np.float64).reshape(mm.shape[0], xv.shape[1])
    cdef Py_ssize_t n = xv.shape[0], r
    cdef int k = mm.shape[0]
    if xv.shape[1] > MAXD:
        raise ValueError("dimension too large for the compiled kernel")
    out = np.empty(n, dtype=np.int8)
    cdef signed char[::1] ov = out
    cdef int* members = <int*> malloc((k + 1) * sizeof(int))
    cdef int* scratch = <int*> malloc((k + 1) * sizeof(int))
    cdef int lab = 0
    if members == NULL or scratch == NULL:
        free(members)
        free(scratch)
        raise MemoryError()
    try:
        with nogil:
            for r in range(n):
                lab = cube_point(lv, mm, mp, xv[r], delta, members, scratch)
                if lab == 2:
                    break
                ov[r] = lab
        if lab == 2:
            raise RuntimeError("no boundary point has an endpoint in the face reached")
    finally:
        free(members)
        free(scratch)
    return out


cdef inline int chain_position(long long mask, long long* masks) nogil:
    cdef int j = 0
    cdef long long m = mask
    while m:
        j += <int>(m & 1)
        m >>= 1
    if masks[j] == mask:
        return j
    return -1


cdef int simplex_point(const long long[::1] mm, const long long[::1] mp, const double[::1] t,
                       const double[::1] x, double delta, int empty_label,
                       int* pos_m, int* pos_p, double* wt, int* members, int* scratch) nogil:
    cdef int d = x.shape[0]
    cdef int k = mm.shape[0]
    cdef int perm[MAXD]
    cdef long long masks[MAXD + 1]
    cdef double lam[MAXD + 1]
    cdef double beta[MAXD + 1]
    cdef double acc_x, acc_b, dist2, step, s, best_s, v, total
    cdef int i, j, a, b, tmpi, nmem, ninner, best_j, ja, jb
    cdef long long active
    cdef int* tmp
    # stable insertion sort of axes by coordinate
    for a in range(d):
        perm[a] = a
    for a in range(1, d):
        tmpi = perm[a]
        b = a - 1
        while b >= 0 and x[perm[b]] > x[tmpi]:
            perm[b + 1] = perm[b]
            b -= 1
        perm[b + 1] = tmpi
    masks[0] = 0
    for j in range(1, d + 1):
        masks[j] = masks[j - 1] | ((<long long>1) << perm[d - j])
    nmem = 0
    for i in range(k):
        ja = chain_position(mm[i], masks)
        jb = chain_position(mp[i], masks)
        if ja >= 0 and jb >= 0:
            pos_m[nmem] = ja
            pos_p[nmem] = jb
            wt[nmem] = t[i]
            members[nmem] = nmem
            nmem += 1
    if nmem == 0:
        return empty_label

    lam[0] = 1.0 - x[perm[d - 1]]
    for j in range(1, d):
        lam[j] = x[perm[d - j]] - x[perm[d - j - 1]]
    lam[d] = x[perm[0]]
    active = ((<long long>1) << (d + 1)) - 1
    while True:
        for j in range(d + 1):
            beta[j] = 0.0
        for a in range(nmem):
            i = members[a]
            beta[pos_m[i]] += 1.0 - wt[i]
            beta[pos_p[i]] += wt[i]
        for j in range(d + 1):
            beta[j] /= nmem
        dist2 = 0.0
        acc_x = 0.0
        acc_b = 0.0
        for a in range(d):
            acc_x += lam[d - a]
            acc_b += beta[d - a]
            dist2 += (acc_x - acc_b) * (acc_x - acc_b)
        if sqrt(dist2) < delta:
            return 0
        best_s = INFINITY
        best_j = -1
        for j in range(d + 1):
            if not ((active >> j) & 1):
                continue
            step = lam[j] - beta[j]
            if step < -TINY:
                s = beta[j] / -step
                if s < best_s:
                    best_s = s
                    best_j = j
        if best_j < 0:
            return 0
        total = 0.0
        for j in range(d + 1):
            if ((active >> j) & 1) and j != best_j:
                v = beta[j] + best_s * (lam[j] - beta[j])
                if v < 0.0:
                    v = 0.0
                lam[j] = v
                total += v
            else:
                lam[j] = 0.0
        for j in range(d + 1):
            lam[j] /= total
        active &= ~((<long long>1) << best_j)
        ninner = 0
        for a in range(nmem):
            i = members[a]
            if ((active >> pos_m[i]) & 1) and ((active >> pos_p[i]) & 1):
                scratch[ninner] = i
                ninner += 1
        if ninner == 0:
            for a in range(nmem):
                i = members[a]
                if (active >> pos_p[i]) & 1:
                    return 1
                if (active >> pos_m[i]) & 1:
                    return -1
            return 2
        tmp = members
        members = scratch
        scratch = tmp
        nmem = ninner


def classify_simplex_batch(mask_minus, mask_plus, t, xs, double delta):
    cdef const long long[::1] mm = np.ascontiguousarray(mask_minus, dtype=np.int64)
    cdef const long long[::1] mp = np.ascontiguousarray(mask_plus, dtype=np.int64)
    cdef const double[::1] tv = np.ascontiguousarray(t, dtype=np.float64)
    cdef const double[:, ::1] xv = np.ascontiguousarray(xs, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0], r
    cdef int k = mm.shape[0]
    cdef int i, empty_label = 0, lab = 0
    if xv.shape[1] > MAXD:
        raise ValueError("dimension too large for the compiled kernel")
    for i in range(k):
        if mm[i] == 0:
            empty_label = -1
            break
        if mp[i] == 0:
            empty_label = 1
            break
    if empty_label == 0 and k > 0:
        raise RuntimeError("no boundary point touches the cube origin")
    out = np.empty(n, dtype=np.int8)
    cdef signed char[::1] ov = out
    cdef int* pos_m = <int*> malloc((k + 1) * sizeof(int))
    cdef int* pos_p = <int*> malloc((k + 1) * sizeof(int))
    cdef int* members = <int*> malloc((k + 1) * sizeof(int))
    cdef int* scratch = <int*> malloc((k + 1) * sizeof(int))
    cdef double* wt = <double*> malloc((k + 1) * sizeof(double))
    if pos_m == NULL or pos_p == NULL or members == NULL or scratch == NULL or wt == NULL:
        free(pos_m); free(pos_p); free(members); free(scratch); free(wt)
        raise MemoryError()
    try:
        with nogil:
            for r in range(n):
                lab = simplex_point(mm, mp, tv, xv[r], delta, empty_label, pos_m, pos_p, wt, members, scratch)
                if lab == 2:
                    break
                ov[r] = lab
        if lab == 2:
            raise RuntimeError("no boundary point has an endpoint in the face reached")
    finally:
        free(pos_m); free(pos_p); free(members); free(scratch); free(wt)
    return out
