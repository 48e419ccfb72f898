# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: pairwise distances, greedy nets, nearest centers.

Mirrors the contracts of ``cubedim._reference``; selected automatically by
``cubedim.kernels`` when importable.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()


def pairwise_distances(coords):
    """Dense symmetric Euclidean distance matrix with a zero diagonal."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2] c = np.ascontiguousarray(coords, dtype=np.float64)
    cdef Py_ssize_t n = c.shape[0]
    cdef Py_ssize_t d = c.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.zeros((n, n), dtype=np.float64)
    cdef Py_ssize_t i, j, k
    cdef double acc, diff
    for i in range(n):
        for j in range(i + 1, n):
            acc = 0.0
            for k in range(d):
                diff = c[i, k] - c[j, k]
                acc += diff * diff
            acc = sqrt(acc)
            out[i, j] = acc
            out[j, i] = acc
    return out


def greedy_net_coords(coords, order, double threshold):
    """Maximal threshold-separated subset scanned in ``order`` (admit iff >=)."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2] c = np.ascontiguousarray(coords, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] o = np.ascontiguousarray(order, dtype=np.int64)
    cdef Py_ssize_t n = c.shape[0]
    cdef Py_ssize_t d = c.shape[1]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] chosen = np.empty(n, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] cc = np.empty((n, d), dtype=np.float64)
    cdef Py_ssize_t k = 0, pos, cand, j, t
    cdef double thr2 = threshold * threshold
    cdef double acc, diff
    cdef bint ok
    for pos in range(o.shape[0]):
        cand = o[pos]
        ok = True
        for j in range(k):
            acc = 0.0
            for t in range(d):
                diff = cc[j, t] - c[cand, t]
                acc += diff * diff
            if acc < thr2:
                ok = False
                break
        if ok:
            chosen[k] = cand
            for t in range(d):
                cc[k, t] = c[cand, t]
            k += 1
    return np.asarray(chosen[:k]).copy()


def greedy_net_matrix(dmat, order, double threshold):
    """Matrix-metric variant of :func:`greedy_net_coords`."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2] m = np.ascontiguousarray(dmat, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] o = np.ascontiguousarray(order, dtype=np.int64)
    cdef Py_ssize_t n = m.shape[0]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] chosen = np.empty(n, dtype=np.int64)
    cdef Py_ssize_t k = 0, pos, cand, j
    cdef bint ok
    for pos in range(o.shape[0]):
        cand = o[pos]
        ok = True
        for j in range(k):
            if m[cand, chosen[j]] < threshold:
                ok = False
                break
        if ok:
            chosen[k] = cand
            k += 1
    return np.asarray(chosen[:k]).copy()


def nearest_center_coords(query_coords, center_coords):
    """Nearest center row per query row; ties to the earlier center row."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2] q = np.ascontiguousarray(query_coords, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] cc = np.ascontiguousarray(center_coords, dtype=np.float64)
    cdef Py_ssize_t n = q.shape[0]
    cdef Py_ssize_t nc = cc.shape[0]
    cdef Py_ssize_t d = q.shape[1]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] best_idx = np.empty(n, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] best_d = np.empty(n, dtype=np.float64)
    cdef Py_ssize_t i, j, t
    cdef double best, acc, diff
    cdef Py_ssize_t arg
    for i in range(n):
        best = -1.0
        arg = 0
        for j in range(nc):
            acc = 0.0
            for t in range(d):
                diff = q[i, t] - cc[j, t]
                acc += diff * diff
            if best < 0.0 or acc < best:
                best = acc
                arg = j
        best_idx[i] = arg
        best_d[i] = sqrt(best)
    return np.asarray(best_idx), np.asarray(best_d)


def nearest_center_matrix(dmat, query_ids, center_ids):
    """Matrix-metric variant of :func:`nearest_center_coords`."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2] m = np.ascontiguousarray(dmat, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] q = np.ascontiguousarray(query_ids, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] c = np.ascontiguousarray(center_ids, dtype=np.int64)
    cdef Py_ssize_t n = q.shape[0]
    cdef Py_ssize_t nc = c.shape[0]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] best_idx = np.empty(n, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] best_d = np.empty(n, dtype=np.float64)
    cdef Py_ssize_t i, j
    cdef double best, v
    cdef Py_ssize_t arg
    for i in range(n):
        best = m[q[i], c[0]]
        arg = 0
        for j in range(1, nc):
            v = m[q[i], c[j]]
            if v < best:
                best = v
                arg = j
        best_idx[i] = arg
        best_d[i] = best
    return np.asarray(best_idx), np.asarray(best_d)
