# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled implementations of the hot kernels.

Same interface as ``_pykernels``.  Loops are sequential and fused where
it pays off (softmax, distances, scatter-add), which is where NumPy's
temporaries and dispatch overhead dominate at desk scale.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log, sqrt, tanh as ctanh

cnp.import_array()

NAME = "cython"


def gather_concat(double[:, ::1] table, long[:, ::1] idx):
    cdef Py_ssize_t n = idx.shape[0], w = idx.shape[1], d = table.shape[1]
    out_arr = np.empty((n, w * d))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, k, r
    for i in range(n):
        for j in range(w):
            r = idx[i, j]
            for k in range(d):
                out[i, j * d + k] = table[r, k]
    return out_arr


def gather_concat_grad(double[:, ::1] gout, long[:, ::1] idx, Py_ssize_t n_rows):
    cdef Py_ssize_t n = idx.shape[0], w = idx.shape[1]
    cdef Py_ssize_t d = gout.shape[1] // w
    gtable_arr = np.zeros((n_rows, d))
    cdef double[:, ::1] gtable = gtable_arr
    cdef Py_ssize_t i, j, k, r
    for i in range(n):
        for j in range(w):
            r = idx[i, j]
            for k in range(d):
                gtable[r, k] += gout[i, j * d + k]
    return gtable_arr


def tanh_fwd(double[:, ::1] x):
    cdef Py_ssize_t n = x.shape[0], m = x.shape[1]
    out_arr = np.empty((n, m))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j
    for i in range(n):
        for j in range(m):
            out[i, j] = ctanh(x[i, j])
    return out_arr


def tanh_grad(double[:, ::1] y, double[:, ::1] gy):
    cdef Py_ssize_t n = y.shape[0], m = y.shape[1]
    out_arr = np.empty((n, m))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j
    for i in range(n):
        for j in range(m):
            out[i, j] = (1.0 - y[i, j] * y[i, j]) * gy[i, j]
    return out_arr


def softmax_rows(double[:, ::1] x):
    cdef Py_ssize_t n = x.shape[0], m = x.shape[1]
    out_arr = np.empty((n, m))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef double mx, s
    for i in range(n):
        mx = x[i, 0]
        for j in range(1, m):
            if x[i, j] > mx:
                mx = x[i, j]
        s = 0.0
        for j in range(m):
            out[i, j] = exp(x[i, j] - mx)
            s += out[i, j]
        for j in range(m):
            out[i, j] /= s
    return out_arr


def softmax_rows_grad(double[:, ::1] y, double[:, ::1] gy):
    cdef Py_ssize_t n = y.shape[0], m = y.shape[1]
    out_arr = np.empty((n, m))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef double inner
    for i in range(n):
        inner = 0.0
        for j in range(m):
            inner += gy[i, j] * y[i, j]
        for j in range(m):
            out[i, j] = y[i, j] * (gy[i, j] - inner)
    return out_arr


def l2norm_rows(double[:, ::1] x):
    cdef Py_ssize_t n = x.shape[0], m = x.shape[1]
    out_arr = np.empty((n, m))
    norms_arr = np.empty(n)
    cdef double[:, ::1] out = out_arr
    cdef double[::1] norms = norms_arr
    cdef Py_ssize_t i, j
    cdef double s
    for i in range(n):
        s = 0.0
        for j in range(m):
            s += x[i, j] * x[i, j]
        s = sqrt(s)
        norms[i] = s
        if s > 0.0:
            for j in range(m):
                out[i, j] = x[i, j] / s
        else:
            for j in range(m):
                out[i, j] = 0.0
    return out_arr, norms_arr


def l2norm_rows_grad(double[:, ::1] y, double[::1] norms, double[:, ::1] gy):
    cdef Py_ssize_t n = y.shape[0], m = y.shape[1]
    out_arr = np.empty((n, m))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef double inner
    for i in range(n):
        inner = 0.0
        for j in range(m):
            inner += gy[i, j] * y[i, j]
        for j in range(m):
            out[i, j] = (gy[i, j] - y[i, j] * inner) / norms[i]
    return out_arr


def pairwise_dist(double[:, ::1] a, double[:, ::1] b):
    cdef Py_ssize_t n = a.shape[0], k = b.shape[0], d = a.shape[1]
    out_arr = np.empty((n, k))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, c
    cdef double s, diff
    for i in range(n):
        for j in range(k):
            s = 0.0
            for c in range(d):
                diff = a[i, c] - b[j, c]
                s += diff * diff
            out[i, j] = sqrt(s)
    return out_arr


def pairwise_dist_grad(double[:, ::1] a, double[:, ::1] b,
                       double[:, ::1] d, double[:, ::1] gd):
    cdef Py_ssize_t n = a.shape[0], k = b.shape[0], m = a.shape[1]
    ga_arr = np.zeros((n, m))
    gb_arr = np.zeros((k, m))
    cdef double[:, ::1] ga = ga_arr
    cdef double[:, ::1] gb = gb_arr
    cdef Py_ssize_t i, j, c
    cdef double scale, diff
    for i in range(n):
        for j in range(k):
            if d[i, j] > 0.0:
                scale = gd[i, j] / d[i, j]
                for c in range(m):
                    diff = scale * (a[i, c] - b[j, c])
                    ga[i, c] += diff
                    gb[j, c] -= diff
    return ga_arr, gb_arr


def weighted_colmeans(double[:, ::1] w, double[:, ::1] h, cnp.uint8_t[::1] active):
    cdef Py_ssize_t n = w.shape[0], k = w.shape[1], d = h.shape[1]
    c_arr = np.zeros((k, d))
    wsum_arr = np.zeros(k)
    cdef double[:, ::1] c = c_arr
    cdef double[::1] wsum = wsum_arr
    cdef Py_ssize_t i, j, m
    cdef double wij
    for i in range(n):
        for j in range(k):
            wsum[j] += w[i, j]
    for i in range(n):
        for j in range(k):
            if active[j]:
                wij = w[i, j]
                for m in range(d):
                    c[j, m] += wij * h[i, m]
    for j in range(k):
        if active[j]:
            for m in range(d):
                c[j, m] /= wsum[j]
    return c_arr, wsum_arr


def weighted_colmeans_grad(double[:, ::1] w, double[:, ::1] h, double[:, ::1] c,
                           double[::1] wsum, cnp.uint8_t[::1] active,
                           double[:, ::1] gc):
    cdef Py_ssize_t n = w.shape[0], k = w.shape[1], d = h.shape[1]
    gw_arr = np.zeros((n, k))
    gh_arr = np.zeros((n, d))
    cdef double[:, ::1] gw = gw_arr
    cdef double[:, ::1] gh = gh_arr
    cdef Py_ssize_t i, j, m
    cdef double inv, acc, gcc
    for j in range(k):
        if not active[j]:
            continue
        inv = 1.0 / wsum[j]
        gcc = 0.0
        for m in range(d):
            gcc += gc[j, m] * c[j, m]
        for i in range(n):
            acc = 0.0
            for m in range(d):
                acc += gc[j, m] * h[i, m]
                gh[i, m] += w[i, j] * inv * gc[j, m]
            gw[i, j] = (acc - gcc) * inv
    return gw_arr, gh_arr


def ce_rows(double[:, ::1] p, long[::1] labels):
    cdef Py_ssize_t n = p.shape[0]
    cdef Py_ssize_t i
    cdef double s = 0.0
    for i in range(n):
        s += log(p[i, labels[i]])
    return (0.0 - s) / n


def ce_rows_grad(double[:, ::1] p, long[::1] labels, double g):
    cdef Py_ssize_t n = p.shape[0]
    gp_arr = np.zeros((n, p.shape[1]))
    cdef double[:, ::1] gp = gp_arr
    cdef Py_ssize_t i
    for i in range(n):
        gp[i, labels[i]] = -g / (n * p[i, labels[i]])
    return gp_arr


def mse_rows(double[:, ::1] p, double[:, ::1] q):
    cdef Py_ssize_t n = p.shape[0], m = p.shape[1]
    cdef Py_ssize_t i, j
    cdef double s = 0.0, diff
    for i in range(n):
        for j in range(m):
            diff = p[i, j] - q[i, j]
            s += diff * diff
    return s / n


def mse_rows_grad(double[:, ::1] p, double[:, ::1] q, double g):
    cdef Py_ssize_t n = p.shape[0], m = p.shape[1]
    gp_arr = np.empty((n, m))
    gq_arr = np.empty((n, m))
    cdef double[:, ::1] gp = gp_arr
    cdef double[:, ::1] gq = gq_arr
    cdef Py_ssize_t i, j
    cdef double v, scale = 2.0 * g / n
    for i in range(n):
        for j in range(m):
            v = scale * (p[i, j] - q[i, j])
            gp[i, j] = v
            gq[i, j] = -v
    return gp_arr, gq_arr
