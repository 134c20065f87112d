# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernels: FNV-1a n-gram hashing and sparse softmax SGD.

Operation-for-operation twin of ``_kernels_py``; see that module for the
contracts. Hash buckets are bit-identical across backends, float paths
agree up to summation rounding.
"""

import numpy as np

from libc.math cimport exp, log

BACKEND_NAME = "compiled"

cdef unsigned long long FNV_OFFSET = 0xCBF29CE484222325ULL
cdef unsigned long long FNV_PRIME = 0x100000001B3ULL


cdef inline unsigned long long _fnv1a(unsigned long long h, const unsigned char* p, Py_ssize_t n):
    cdef Py_ssize_t i
    for i in range(n):
        h = (h ^ p[i]) * FNV_PRIME
    return h


def ngram_buckets(list tokens, long long dim):
    """Hash buckets for all unigrams then bigrams, in token order."""
    cdef Py_ssize_t n = len(tokens)
    out_arr = np.empty(n + (n - 1 if n > 1 else 0), dtype=np.int64)
    cdef long long[::1] out = out_arr
    cdef unsigned long long udim = <unsigned long long> dim
    cdef unsigned long long h
    cdef bytes t1, t2
    cdef Py_ssize_t i
    for i in range(n):
        t1 = tokens[i]
        h = _fnv1a(FNV_OFFSET, <const unsigned char*> (<const char*> t1), len(t1))
        out[i] = <long long> (h % udim)
    for i in range(n - 1):
        t1 = tokens[i]
        t2 = tokens[i + 1]
        h = _fnv1a(FNV_OFFSET, <const unsigned char*> (<const char*> t1), len(t1))
        h = (h ^ 0x20) * FNV_PRIME  # separator: single space
        h = _fnv1a(h, <const unsigned char*> (<const char*> t2), len(t2))
        out[n + i] = <long long> (h % udim)
    return out_arr


def sgd_epoch(long long[::1] indptr, long long[::1] indices, double[::1] data,
              long long[::1] labels, long long[::1] order,
              double[:, ::1] weights, double[::1] bias,
              double scale, double lr, double l2, long long batch_size):
    """One pass of mini-batch SGD over the rows listed in ``order``.

    ``weights`` stores the lazily scaled matrix (effective = scale *
    weights); updated in place. Returns (new scale, mean data loss).
    """
    cdef Py_ssize_t n = order.shape[0]
    cdef Py_ssize_t n_classes = weights.shape[0]
    cdef Py_ssize_t bsz, k, e, c, jj, col
    cdef long long r, y
    cdef double total_loss = 0.0
    cdef double m, sumexp, v, coef, s
    err_arr = np.empty((batch_size, n_classes), dtype=np.float64)
    scores_arr = np.empty(n_classes, dtype=np.float64)
    cdef double[:, ::1] err = err_arr
    cdef double[::1] scores = scores_arr

    for k in range(0, n, batch_size):
        bsz = min(<Py_ssize_t> batch_size, n - k)
        # pass 1: softmax errors at the current weights for the whole batch
        for e in range(bsz):
            r = order[k + e]
            for c in range(n_classes):
                scores[c] = bias[c]
            for jj in range(indptr[r], indptr[r + 1]):
                col = <Py_ssize_t> indices[jj]
                v = data[jj]
                for c in range(n_classes):
                    scores[c] += weights[c, col] * v * scale
            m = scores[0]
            for c in range(1, n_classes):
                if scores[c] > m:
                    m = scores[c]
            sumexp = 0.0
            for c in range(n_classes):
                err[e, c] = exp(scores[c] - m)
                sumexp += err[e, c]
            y = labels[r]
            total_loss -= scores[y] - m - log(sumexp)
            for c in range(n_classes):
                err[e, c] = err[e, c] / sumexp
            err[e, y] -= 1.0
        for c in range(n_classes):
            s = 0.0
            for e in range(bsz):
                s += err[e, c]
            bias[c] -= lr * (s / bsz)
        scale *= 1.0 - lr * l2
        coef = -lr / (bsz * scale)
        # pass 2: scatter the batch gradient into the stored weights
        for e in range(bsz):
            r = order[k + e]
            for jj in range(indptr[r], indptr[r + 1]):
                col = <Py_ssize_t> indices[jj]
                v = data[jj]
                for c in range(n_classes):
                    weights[c, col] += coef * err[e, c] * v
    return scale, total_loss / n


def loss_and_grad(long long[::1] indptr, long long[::1] indices, double[::1] data,
                  long long[::1] labels, double[:, ::1] weights, double[::1] bias,
                  double l2):
    """Full-batch mean cross-entropy with L2, plus its exact gradient."""
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t n_classes = weights.shape[0]
    cdef Py_ssize_t e, c, jj, col
    cdef long long y
    cdef double m, sumexp, v
    cdef double loss = 0.0
    grad_w_arr = np.multiply(weights, l2)
    grad_b_arr = np.zeros(n_classes, dtype=np.float64)
    scores_arr = np.empty(n_classes, dtype=np.float64)
    p_arr = np.empty(n_classes, dtype=np.float64)
    cdef double[:, ::1] grad_w = grad_w_arr
    cdef double[::1] grad_b = grad_b_arr
    cdef double[::1] scores = scores_arr
    cdef double[::1] p = p_arr

    for e in range(n):
        for c in range(n_classes):
            scores[c] = bias[c]
        for jj in range(indptr[e], indptr[e + 1]):
            col = <Py_ssize_t> indices[jj]
            v = data[jj]
            for c in range(n_classes):
                scores[c] += weights[c, col] * v
        m = scores[0]
        for c in range(1, n_classes):
            if scores[c] > m:
                m = scores[c]
        sumexp = 0.0
        for c in range(n_classes):
            p[c] = exp(scores[c] - m)
            sumexp += p[c]
        y = labels[e]
        loss -= scores[y] - m - log(sumexp)
        for c in range(n_classes):
            p[c] = p[c] / sumexp
        p[y] -= 1.0
        for c in range(n_classes):
            grad_b[c] += p[c]
        for jj in range(indptr[e], indptr[e + 1]):
            col = <Py_ssize_t> indices[jj]
            v = data[jj]
            for c in range(n_classes):
                grad_w[c, col] += p[c] * (v / n)
    loss = loss / n + 0.5 * l2 * float(np.multiply(weights, weights).sum())
    for c in range(n_classes):
        grad_b[c] = grad_b[c] / n
    return loss, grad_w_arr, grad_b_arr
