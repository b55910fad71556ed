# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled twin of exemplar.kernels.pure.

Fused C loops over small batches, where per-call numpy overhead dominates.
Same contracts as the pure module; IEEE semantics preserved (no fast-math),
so underflow behaves identically.  Reductions run in sequential order, which
may differ from numpy's pairwise order by a few ULPs.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, tanh

cnp.import_array()


def centroid_probs(double[:, ::1] samples, double[:, ::1] centroids, double tau):
    cdef Py_ssize_t n = samples.shape[0]
    cdef Py_ssize_t dim = samples.shape[1]
    cdef Py_ssize_t c = centroids.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((n, c))
    cdef double[:, ::1] o = out
    cdef Py_ssize_t i, j, k
    cdef double acc, diff, s, m
    for i in range(n):
        s = 0.0
        for j in range(c):
            acc = 0.0
            for k in range(dim):
                diff = samples[i, k] - centroids[j, k]
                acc += diff * diff
            o[i, j] = exp(-acc / tau)
            s += o[i, j]
        if s == 0.0:
            # every class underflowed: renormalize against the best logit
            m = 0.0
            for j in range(c):
                acc = 0.0
                for k in range(dim):
                    diff = samples[i, k] - centroids[j, k]
                    acc += diff * diff
                o[i, j] = -acc / tau
                if j == 0 or o[i, j] > m:
                    m = o[i, j]
            s = 0.0
            for j in range(c):
                o[i, j] = exp(o[i, j] - m)
                s += o[i, j]
        for j in range(c):
            o[i, j] /= s
    return out


def dense(double[:, ::1] x, double[:, ::1] weight, double[::1] bias):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t din = x.shape[1]
    cdef Py_ssize_t dout = weight.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((n, dout))
    cdef double[:, ::1] o = out
    cdef Py_ssize_t i, j, k
    cdef double acc
    for i in range(n):
        for j in range(dout):
            acc = bias[j]
            for k in range(din):
                acc += x[i, k] * weight[j, k]
            o[i, j] = acc
    return out


def tanh_rows(double[:, ::1] a):
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t d = a.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((n, d))
    cdef double[:, ::1] o = out
    cdef Py_ssize_t i, j
    for i in range(n):
        for j in range(d):
            o[i, j] = tanh(a[i, j])
    return out


def softmax_rows(double[:, ::1] a):
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t d = a.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((n, d))
    cdef double[:, ::1] o = out
    cdef Py_ssize_t i, j
    cdef double m, s
    for i in range(n):
        m = a[i, 0]
        for j in range(1, d):
            if a[i, j] > m:
                m = a[i, j]
        s = 0.0
        for j in range(d):
            o[i, j] = exp(a[i, j] - m)
            s += o[i, j]
        for j in range(d):
            o[i, j] /= s
    return out


def momentum_mutate(double[:, ::1] latents, double[:, ::1] velocities,
                    double[:, ::1] noise, double alpha, double bound):
    cdef Py_ssize_t n = latents.shape[0]
    cdef Py_ssize_t d = latents.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] lat = np.empty((n, d))
    cdef cnp.ndarray[cnp.float64_t, ndim=2] vel = np.empty((n, d))
    cdef double[:, ::1] lo = lat
    cdef double[:, ::1] vo = vel
    cdef Py_ssize_t i, j
    cdef double v, z
    for i in range(n):
        for j in range(d):
            v = alpha * velocities[i, j] + noise[i, j]
            z = latents[i, j] + v
            if z > bound:
                z = bound
            elif z < -bound:
                z = -bound
            vo[i, j] = v
            lo[i, j] = z
    return lat, vel


def plain_mutate(double[:, ::1] latents, double[:, ::1] noise, double bound):
    cdef Py_ssize_t n = latents.shape[0]
    cdef Py_ssize_t d = latents.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] lat = np.empty((n, d))
    cdef double[:, ::1] lo = lat
    cdef Py_ssize_t i, j
    cdef double z
    for i in range(n):
        for j in range(d):
            z = latents[i, j] + noise[i, j]
            if z > bound:
                z = bound
            elif z < -bound:
                z = -bound
            lo[i, j] = z
    return lat
