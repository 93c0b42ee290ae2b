# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the hot kernels; same signatures as _pykernels."""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, INFINITY

cnp.import_array()


cdef inline double _sqd(const double[:, ::1] A, Py_ssize_t i, const double[:, ::1] B,
                        Py_ssize_t j, Py_ssize_t d) noexcept nogil:
    cdef double s = 0.0, t
    cdef Py_ssize_t k
    for k in range(d):
        t = A[i, k] - B[j, k]
        s += t * t
    return s


def _prep(X, weights=None):
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if weights is not None:
        X = np.ascontiguousarray(X * np.sqrt(np.asarray(weights, dtype=np.float64)))
    return X


def sq_dists(A, B, weights=None):
    cdef const double[:, ::1] a = _prep(A, weights)
    cdef const double[:, ::1] b = _prep(B, weights)
    cdef Py_ssize_t n = a.shape[0], m = b.shape[0], d = a.shape[1], i, j
    out = np.empty((n, m))
    cdef double[:, ::1] o = out
    with nogil:
        for i in range(n):
            for j in range(m):
                o[i, j] = _sqd(a, i, b, j, d)
    return out


def contingency(x, y, Py_ssize_t kx, Py_ssize_t ky):
    cdef const long long[::1] xv = np.ascontiguousarray(x, dtype=np.int64)
    cdef const long long[::1] yv = np.ascontiguousarray(y, dtype=np.int64)
    out = np.zeros((kx, ky), dtype=np.int64)
    cdef long long[:, ::1] o = out
    cdef Py_ssize_t i
    with nogil:
        for i in range(xv.shape[0]):
            o[xv[i], yv[i]] += 1
    return out


cdef inline void _insert_k(double* best, Py_ssize_t k, double v) noexcept nogil:
    # best holds the k smallest values seen so far in ascending order
    cdef Py_ssize_t p
    if v >= best[k - 1]:
        return
    p = k - 1
    while p > 0 and best[p - 1] > v:
        best[p] = best[p - 1]
        p -= 1
    best[p] = v


def kth_neighbor_sq(X, Py_ssize_t k):
    cdef const double[:, ::1] x = _prep(X)
    cdef Py_ssize_t n = x.shape[0], d = x.shape[1], i, j, t
    out = np.empty(n)
    cdef double[::1] o = out
    best_arr = np.empty(k)
    cdef double[::1] best_view = best_arr
    cdef double* best = &best_view[0]
    with nogil:
        for i in range(n):
            for t in range(k):
                best[t] = INFINITY
            for j in range(n):
                if j != i:
                    _insert_k(best, k, _sqd(x, i, x, j, d))
            o[i] = best[k - 1]
    return out


def nearest_sq(Q, R, weights=None, bint exclude_self=False):
    cdef const double[:, ::1] q = _prep(Q, weights)
    cdef const double[:, ::1] r = _prep(R, weights)
    cdef Py_ssize_t n = q.shape[0], m = r.shape[0], d = q.shape[1], i, j, bj
    cdef double bd, v
    dist = np.empty(n)
    idx = np.empty(n, dtype=np.int64)
    cdef double[::1] dv = dist
    cdef long long[::1] iv = idx
    with nogil:
        for i in range(n):
            bd = INFINITY
            bj = 0
            for j in range(m):
                if exclude_self and j == i:
                    continue
                v = _sqd(q, i, r, j, d)
                if v < bd:
                    bd = v
                    bj = j
            dv[i] = bd
            iv[i] = bj
    return dist, idx


def prdc_counts(R, S, r_real, r_synth):
    cdef const double[:, ::1] rv = _prep(R)
    cdef const double[:, ::1] sv = _prep(S)
    cdef const double[::1] rr = np.ascontiguousarray(r_real, dtype=np.float64)
    cdef const double[::1] rs = np.ascontiguousarray(r_synth, dtype=np.float64)
    cdef Py_ssize_t n = rv.shape[0], m = sv.shape[0], d = rv.shape[1], i, j
    cdef double v
    in_real = np.zeros(m, dtype=np.int64)
    real_in_synth = np.zeros(n, dtype=np.uint8)
    covered = np.zeros(n, dtype=np.uint8)
    cdef long long[::1] ir = in_real
    cdef unsigned char[::1] ris = real_in_synth
    cdef unsigned char[::1] cov = covered
    with nogil:
        for i in range(n):
            for j in range(m):
                v = _sqd(rv, i, sv, j, d)
                if v <= rr[i]:
                    ir[j] += 1
                    cov[i] = 1
                if v <= rs[j]:
                    ris[i] = 1
    return in_real, real_in_synth.astype(bool), covered.astype(bool)


def rbf_sum(A, B, double gamma, bint skip_diagonal=False):
    cdef const double[:, ::1] a = _prep(A)
    cdef const double[:, ::1] b = _prep(B)
    cdef Py_ssize_t n = a.shape[0], m = b.shape[0], d = a.shape[1], i, j
    cdef double total = 0.0, row
    with nogil:
        for i in range(n):
            row = 0.0
            for j in range(m):
                if skip_diagonal and i == j:
                    continue
                row += exp(-gamma * _sqd(a, i, b, j, d))
            total += row
    return total


def concordance_counts(times, events, scores):
    cdef const double[::1] t = np.ascontiguousarray(times, dtype=np.float64)
    cdef const long long[::1] e = np.ascontiguousarray(events, dtype=np.int64)
    cdef const double[::1] s = np.ascontiguousarray(scores, dtype=np.float64)
    cdef Py_ssize_t n = t.shape[0], i, j
    cdef long long conc = 0, disc = 0, tied = 0
    with nogil:
        for i in range(n):
            if e[i] != 1:
                continue
            for j in range(n):
                if t[i] < t[j]:
                    if s[i] > s[j]:
                        conc += 1
                    elif s[i] < s[j]:
                        disc += 1
                    else:
                        tied += 1
    return int(conc), int(disc), int(tied)


def sample_categorical(cum, rows, u):
    cdef const double[:, ::1] c = np.ascontiguousarray(cum, dtype=np.float64)
    cdef const long long[::1] r = np.ascontiguousarray(rows, dtype=np.int64)
    cdef const double[::1] uv = np.ascontiguousarray(u, dtype=np.float64)
    cdef Py_ssize_t n = r.shape[0], k = c.shape[1], i, j
    out = np.empty(n, dtype=np.int64)
    cdef long long[::1] o = out
    with nogil:
        for i in range(n):
            j = 0
            while j < k - 1 and c[r[i], j] <= uv[i]:
                j += 1
            o[i] = j
    return out
