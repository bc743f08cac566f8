# cython: language_level=3
# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled single-pass kernels for the two hot loops.

``accumulate_distance_curve`` keeps a 12-value running sum while walking an
acquisition sequence, so the whole curve costs O(n * months) regardless of n.
``normalized_rmsd_*`` fuse per-row normalization with the RMSD against a
target, for the dataset-wide distance passes.

Callers (``retail_profiler.kernels``) validate shapes, contiguity and
nonzero row sums before dispatching here.
"""

from libc.math cimport sqrt

import numpy as np


def accumulate_distance_curve(const double[:, ::1] raw, const double[::1] target,
                              double[::1] out):
    cdef Py_ssize_t n = raw.shape[0]
    cdef Py_ssize_t m = raw.shape[1]
    cdef double[::1] acc = np.zeros(m, dtype=np.float64)
    cdef Py_ssize_t i, j
    cdef double total, mean, diff, sq
    with nogil:
        for i in range(n):
            total = 0.0
            for j in range(m):
                acc[j] += raw[i, j]
                total += acc[j]
            mean = total / m
            sq = 0.0
            for j in range(m):
                diff = acc[j] / mean - target[j]
                sq += diff * diff
            out[i] = sqrt(sq / m)


def normalized_rmsd_single(const double[:, ::1] raw, const double[::1] target,
                           double[::1] out):
    cdef Py_ssize_t n = raw.shape[0]
    cdef Py_ssize_t m = raw.shape[1]
    cdef Py_ssize_t i, j
    cdef double total, mean, diff, sq
    with nogil:
        for i in range(n):
            total = 0.0
            for j in range(m):
                total += raw[i, j]
            mean = total / m
            sq = 0.0
            for j in range(m):
                diff = raw[i, j] / mean - target[j]
                sq += diff * diff
            out[i] = sqrt(sq / m)


def normalized_rmsd_rows(const double[:, ::1] raw, const double[:, ::1] targets,
                         double[::1] out):
    cdef Py_ssize_t n = raw.shape[0]
    cdef Py_ssize_t m = raw.shape[1]
    cdef Py_ssize_t i, j
    cdef double total, mean, diff, sq
    with nogil:
        for i in range(n):
            total = 0.0
            for j in range(m):
                total += raw[i, j]
            mean = total / m
            sq = 0.0
            for j in range(m):
                diff = raw[i, j] / mean - targets[i, j]
                sq += diff * diff
            out[i] = sqrt(sq / m)
