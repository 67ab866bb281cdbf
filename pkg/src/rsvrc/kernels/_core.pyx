# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels. Signatures match ``_fallback`` one to one.

Row gathers are fused into the loops (no ``A[idx]`` copy) and every symmetric
accumulation touches only the upper triangle.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, fabs, sqrt

cnp.import_array()


cdef inline Py_ssize_t _row(const cnp.int64_t[::1] idx, Py_ssize_t j, bint full) noexcept nogil:
    return j if full else idx[j]


def _prep(A, idx):
    A = np.ascontiguousarray(A, dtype=np.float64)
    if idx is None:
        return A, np.zeros(0, dtype=np.int64), True, A.shape[0]
    idx = np.ascontiguousarray(idx, dtype=np.int64)
    return A, idx, False, idx.shape[0]


def quad_forms(A, idx, M):
    A, idx, full_, b_ = _prep(A, idx)
    cdef Py_ssize_t b = b_
    cdef bint full = full_
    cdef const double[:, ::1] a = A
    cdef const cnp.int64_t[::1] ix = idx
    cdef const double[:, ::1] m = np.ascontiguousarray(M, dtype=np.float64)
    cdef Py_ssize_t p = a.shape[1], j, r, u, v
    out = np.empty(b, dtype=np.float64)
    cdef double[::1] o = out
    cdef double acc, au, row
    with nogil:
        for j in range(b):
            r = _row(ix, j, full)
            acc = 0.0
            for u in range(p):
                au = a[r, u]
                row = 0.5 * m[u, u] * au
                for v in range(u + 1, p):
                    row = row + m[u, v] * a[r, v]
                acc = acc + au * row
            o[j] = 2.0 * acc
    return out


def quad_forms_multi(A, idx, Ms):
    A, idx, full_, b_ = _prep(A, idx)
    cdef Py_ssize_t b = b_
    cdef bint full = full_
    cdef const double[:, ::1] a = A
    cdef const cnp.int64_t[::1] ix = idx
    cdef const double[:, :, ::1] m = np.ascontiguousarray(Ms, dtype=np.float64)
    cdef Py_ssize_t p = a.shape[1], k = m.shape[0], j, r, u, v, c
    out = np.empty((b, k), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef double acc, au, row
    with nogil:
        for j in range(b):
            r = _row(ix, j, full)
            for c in range(k):
                acc = 0.0
                for u in range(p):
                    au = a[r, u]
                    row = 0.5 * m[c, u, u] * au
                    for v in range(u + 1, p):
                        row = row + m[c, u, v] * a[r, v]
                    acc = acc + au * row
                o[j, c] = 2.0 * acc
    return out


def weighted_gram(A, idx, w):
    A, idx, full_, b_ = _prep(A, idx)
    cdef Py_ssize_t b = b_
    cdef bint full = full_
    cdef const double[:, ::1] a = A
    cdef const cnp.int64_t[::1] ix = idx
    cdef const double[::1] wt = np.ascontiguousarray(w, dtype=np.float64)
    cdef Py_ssize_t p = a.shape[1], j, r, u, v
    out = np.zeros((p, p), dtype=np.float64)
    cdef double[:, ::1] g = out
    cdef double s
    with nogil:
        for j in range(b):
            r = _row(ix, j, full)
            for u in range(p):
                s = wt[j] * a[r, u]
                for v in range(u, p):
                    g[u, v] += s * a[r, v]
        for u in range(p):
            for v in range(u + 1, p):
                g[v, u] = g[u, v]
    return out


def weighted_gram_multi(A, idx, W):
    A, idx, full_, b_ = _prep(A, idx)
    cdef Py_ssize_t b = b_
    cdef bint full = full_
    cdef const double[:, ::1] a = A
    cdef const cnp.int64_t[::1] ix = idx
    cdef const double[:, ::1] wt = np.ascontiguousarray(W, dtype=np.float64)
    cdef Py_ssize_t p = a.shape[1], k = wt.shape[1], j, r, u, v, c
    out = np.zeros((k, p, p), dtype=np.float64)
    cdef double[:, :, ::1] g = out
    cdef double auv
    with nogil:
        for j in range(b):
            r = _row(ix, j, full)
            for u in range(p):
                for v in range(u, p):
                    auv = a[r, u] * a[r, v]
                    for c in range(k):
                        g[c, u, v] += wt[j, c] * auv
        for c in range(k):
            for u in range(p):
                for v in range(u + 1, p):
                    g[c, v, u] = g[c, u, v]
    return out


def margins(A, idx, x, labels):
    A, idx, full_, b_ = _prep(A, idx)
    cdef Py_ssize_t b = b_
    cdef bint full = full_
    cdef const double[:, ::1] a = A
    cdef const cnp.int64_t[::1] ix = idx
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef const double[::1] lab = np.ascontiguousarray(labels, dtype=np.float64)
    cdef Py_ssize_t p = a.shape[1], j, r, u
    out = np.empty(b, dtype=np.float64)
    cdef double[::1] o = out
    cdef double acc
    with nogil:
        for j in range(b):
            r = _row(ix, j, full)
            acc = 0.0
            for u in range(p):
                acc = acc + a[r, u] * xv[u]
            o[j] = acc * lab[r]
    return out


def weighted_rowsum(A, idx, w):
    A, idx, full_, b_ = _prep(A, idx)
    cdef Py_ssize_t b = b_
    cdef bint full = full_
    cdef const double[:, ::1] a = A
    cdef const cnp.int64_t[::1] ix = idx
    cdef const double[::1] wt = np.ascontiguousarray(w, dtype=np.float64)
    cdef Py_ssize_t p = a.shape[1], j, r, u
    out = np.zeros(p, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for j in range(b):
            r = _row(ix, j, full)
            for u in range(p):
                o[u] += wt[j] * a[r, u]
    return out


def logistic_terms(z):
    cdef const double[::1] zv = np.ascontiguousarray(z, dtype=np.float64)
    cdef Py_ssize_t n = zv.shape[0], i
    loss = np.empty(n, dtype=np.float64)
    d1 = np.empty(n, dtype=np.float64)
    d2 = np.empty(n, dtype=np.float64)
    cdef double[::1] lo = loss, g1 = d1, g2 = d2
    cdef double e, s, q, sq2
    with nogil:
        for i in range(n):
            e = exp(-fabs(zv[i]))
            if zv[i] >= 0:
                s = 1.0 / (1.0 + e)
                q = e / (1.0 + e)
            else:
                s = e / (1.0 + e)
                q = 1.0 / (1.0 + e)
            sq2 = s * q * q
            lo[i] = q * q
            g1[i] = -2.0 * sq2
            g2[i] = 2.0 * sq2 * (2.0 * s - q)
    return loss, d1, d2


def cubic_gd(g, H, double sigma, double step, double tol_grad, double delta, Py_ssize_t max_iter, h0):
    cdef const double[::1] gv = np.ascontiguousarray(g, dtype=np.float64)
    cdef const double[:, ::1] hm = np.ascontiguousarray(H, dtype=np.float64)
    cdef Py_ssize_t k = gv.shape[0], i, j, it
    h_out = np.array(h0, dtype=np.float64, copy=True)
    cdef double[::1] h = h_out
    cdef double[::1] hh = np.empty(k, dtype=np.float64)
    cdef double[::1] gr = np.empty(k, dtype=np.float64)
    cdef double nh, m, gn, acc, gh, hhh
    cdef bint ok = False
    with nogil:
        it = 0
        while True:
            nh = 0.0
            for i in range(k):
                nh = nh + h[i] * h[i]
            nh = sqrt(nh)
            gh = 0.0
            hhh = 0.0
            gn = 0.0
            for i in range(k):
                acc = 0.0
                for j in range(k):
                    acc = acc + hm[i, j] * h[j]
                hh[i] = acc
                gh = gh + gv[i] * h[i]
                hhh = hhh + h[i] * acc
                gr[i] = gv[i] + acc + 0.5 * sigma * nh * h[i]
                gn = gn + gr[i] * gr[i]
            m = gh + 0.5 * hhh + sigma / 6.0 * nh * nh * nh
            if m <= -sigma / 12.0 * nh * nh * nh + delta and sqrt(gn) <= tol_grad:
                ok = True
                break
            if it == max_iter:
                break
            for i in range(k):
                h[i] = h[i] - step * gr[i]
            it = it + 1
    return h_out, it, bool(ok)
