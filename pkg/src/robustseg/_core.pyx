# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled consensus-scoring kernels for RANSAC.

Predictions accumulate ``design[p, j] * alpha[j]`` for j = 0..K-1 starting
from 0.0, the same order as the numpy fallback in ``_core_py``, so both
backends produce identical inlier decisions. Built with FMA contraction
disabled for the same reason.
"""
import numpy as np
from libc.math cimport fabs


def best_consensus(const double[:, ::1] design, const double[::1] f,
                   const double[:, ::1] alphas, const unsigned char[::1] valid,
                   double eps):
    """Index and size of the first largest consensus set among valid models.

    Returns ``(-1, 0)`` when no model is valid. A candidate is abandoned as
    soon as its misses rule out beating the current best.
    """
    cdef Py_ssize_t n = design.shape[0]
    cdef Py_ssize_t k = design.shape[1]
    cdef Py_ssize_t m = alphas.shape[0]
    cdef Py_ssize_t i, p, j, miss, max_miss
    cdef Py_ssize_t best = -1
    cdef Py_ssize_t best_count = -1
    cdef double pred
    with nogil:
        for i in range(m):
            if not valid[i]:
                continue
            max_miss = n - best_count - 1
            miss = 0
            for p in range(n):
                pred = 0.0
                for j in range(k):
                    pred = pred + design[p, j] * alphas[i, j]
                if not fabs(f[p] - pred) <= eps:
                    miss += 1
                    if miss > max_miss:
                        break
            if miss <= max_miss:
                best = i
                best_count = n - miss
    if best < 0:
        return -1, 0
    return int(best), int(best_count)


def consensus_counts(const double[:, ::1] design, const double[::1] f,
                     const double[:, ::1] alphas, double eps):
    """Inlier count of every model (no early exit)."""
    cdef Py_ssize_t n = design.shape[0]
    cdef Py_ssize_t k = design.shape[1]
    cdef Py_ssize_t m = alphas.shape[0]
    out = np.zeros(m, dtype=np.int64)
    cdef long long[::1] counts = out
    cdef Py_ssize_t i, p, j
    cdef long long c
    cdef double pred
    with nogil:
        for i in range(m):
            c = 0
            for p in range(n):
                pred = 0.0
                for j in range(k):
                    pred = pred + design[p, j] * alphas[i, j]
                if fabs(f[p] - pred) <= eps:
                    c += 1
            counts[i] = c
    return out


def inlier_mask(const double[:, ::1] design, const double[::1] f,
                const double[::1] alpha, double eps):
    cdef Py_ssize_t n = design.shape[0]
    cdef Py_ssize_t k = design.shape[1]
    out = np.zeros(n, dtype=bool)
    cdef unsigned char[::1] mask = out.view(np.uint8)
    cdef Py_ssize_t p, j
    cdef double pred
    with nogil:
        for p in range(n):
            pred = 0.0
            for j in range(k):
                pred = pred + design[p, j] * alpha[j]
            mask[p] = fabs(f[p] - pred) <= eps
    return out
